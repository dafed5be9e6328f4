"""Pure-Python fallback for the direct convolution core.

Same contract as the compiled extension: a literal summation engine (scipy's
``method='direct'`` is a C nested loop, not an FFT), used when the extension
is unavailable or explicitly disabled.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve as _sp_convolve


def direct_convolve(kernels: np.ndarray, field: np.ndarray, cell_volume: float) -> np.ndarray:
    C = kernels.shape[0]
    n0, n1, n2 = field.shape
    if kernels.shape[1:] != (2 * n0 - 1, 2 * n1 - 1, 2 * n2 - 1):
        raise ValueError("kernel table must cover the (2N-1)^3 offset lattice")
    out = np.empty((C, n0, n1, n2))
    for c in range(C):
        # 'valid' overlap of the (2N-1)^3 table with the field yields exactly
        # out[p] = sum_q K[p - q + N - 1] f[q]
        out[c] = _sp_convolve(kernels[c], field, mode="valid", method="direct")
    out *= cell_volume
    return out
