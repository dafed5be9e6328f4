"""Velocity-space convolution engines.

Two interchangeable engines compute (K * f)(v) = sum_q K(v - v_q) f(v_q) h^3
on the cell-centered lattice:

* ``direct`` - literal summation over the (2N-1)^3 offset table, the oracle
  engine.  A compiled extension runs the O(N^6) loop; a NumPy/SciPy fallback
  is selected at import when the extension is missing or when the
  ``LANDAULAB_PURE_PYTHON`` environment variable is set.
* ``fft`` - circular convolution on a lattice zero-padded by 2x per axis,
  which is exactly enough that wrap-around never reaches the physical
  window; bitwise-deterministic and fast.

Both engines agree to roundoff; the test suite pins relative 1e-10.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["direct_convolve", "fft_convolve", "offset_lattice", "kernel_fft",
           "COMPILED_AVAILABLE", "using_compiled_core"]

try:
    from . import _direct_conv as _compiled
    COMPILED_AVAILABLE = True
except ImportError:  # pragma: no cover - build-environment dependent
    _compiled = None
    COMPILED_AVAILABLE = False

from . import _direct_conv_np as _fallback


def using_compiled_core() -> bool:
    return COMPILED_AVAILABLE and not os.environ.get("LANDAULAB_PURE_PYTHON")


def direct_convolve(kernels: np.ndarray, field: np.ndarray, cell_volume: float,
                    force_fallback: bool = False) -> np.ndarray:
    """Direct-summation convolution of a (C, 2N-1, 2N-1, 2N-1) kernel stack
    against an (N, N, N) field."""
    kernels = np.ascontiguousarray(kernels, dtype=np.float64)
    field = np.ascontiguousarray(field, dtype=np.float64)
    if using_compiled_core() and not force_fallback:
        return _compiled.direct_convolve(kernels, field, cell_volume)
    return _fallback.direct_convolve(kernels, field, cell_volume)


def offset_lattice(n: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The (2N-1)^3 difference lattice v_p - v_q of a cell-centered axis."""
    d = np.arange(-(n - 1), n) * h
    return np.meshgrid(d, d, d, indexing="ij")


def kernel_fft(kernels: np.ndarray, n: int, pad_factor: int = 2) -> np.ndarray:
    """Real FFT of the kernel table laid out for circular convolution on the
    padded lattice.  ``pad_factor`` below 2 admits wrap-around and is
    rejected."""
    if pad_factor < 2:
        raise ValueError("FFT engine requires zero-padding >= 2x per axis")
    m = pad_factor * n
    C = kernels.shape[0]
    pad = np.zeros((C, m, m, m))
    idx = np.arange(-(n - 1), n) % m
    pad[(slice(None), *np.ix_(idx, idx, idx))] = kernels
    return np.fft.rfftn(pad, axes=(1, 2, 3))


def fft_convolve(kernels_hat: np.ndarray, field: np.ndarray, cell_volume: float,
                 pad_factor: int = 2) -> np.ndarray:
    """Convolve using a precomputed ``kernel_fft`` table."""
    n = field.shape[0]
    m = pad_factor * n
    fpad = np.zeros((m, m, m))
    fpad[:n, :n, :n] = field
    fhat = np.fft.rfftn(fpad)
    out = np.fft.irfftn(kernels_hat * fhat[None], s=(m, m, m), axes=(1, 2, 3))
    return out[:, :n, :n, :n] * cell_volume
