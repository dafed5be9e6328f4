# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled core for the direct (non-FFT) velocity-space convolution.

out[c, p] = cell_volume * sum_q kernels[c, p - q + N - 1] * field[q]

``kernels`` holds each kernel component tabulated on the offset lattice
(2N-1 points per axis); this is the O(N^6) oracle engine the FFT path is
checked against.
"""

import numpy as np

cimport cython


def direct_convolve(double[:, :, :, ::1] kernels, double[:, :, ::1] field,
                    double cell_volume):
    cdef Py_ssize_t C = kernels.shape[0]
    cdef Py_ssize_t N0 = field.shape[0]
    cdef Py_ssize_t N1 = field.shape[1]
    cdef Py_ssize_t N2 = field.shape[2]
    if kernels.shape[1] != 2 * N0 - 1 or kernels.shape[2] != 2 * N1 - 1 \
            or kernels.shape[3] != 2 * N2 - 1:
        raise ValueError("kernel table must cover the (2N-1)^3 offset lattice")

    out_arr = np.zeros((C, N0, N1, N2), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, j, k, qi, qj, qk, oi, oj
    cdef double fv

    for qi in range(N0):
        for qj in range(N1):
            for qk in range(N2):
                fv = field[qi, qj, qk]
                if fv == 0.0:
                    continue
                for c in range(C):
                    for i in range(N0):
                        oi = i - qi + N0 - 1
                        for j in range(N1):
                            oj = j - qj + N1 - 1
                            for k in range(N2):
                                out[c, i, j, k] += fv * kernels[c, oi, oj, k - qk + N2 - 1]

    out_arr *= cell_volume
    return out_arr
