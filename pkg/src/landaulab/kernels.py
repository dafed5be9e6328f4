"""Pointwise collision-kernel algebra.

The kernel matrix is the projection orthogonal to z scaled by |z|^{gamma+2}:

    a_ij(z) = (delta_ij - z_i z_j / |z|^2) |z|^{gamma+2},

so a(z) z = 0, a is symmetric positive semidefinite, and a(0) = 0.  Its
derivatives are evaluated from the analytic product-rule expansion (never by
differencing samples).  The double contraction c = d2_{z_i z_j} a_ij has a
closed form, but it is only trusted after the finite-difference oracle
confirms it per gamma: ``kernel_c`` refuses to evaluate until the gate has
passed.

Conventions at z = 0: |z|^gamma is continuously extended to 1 for gamma = 0
and to 0 for gamma > 0; z-dependent ratios (z_i z_j / |z|^2 and friends) are
set to 0 there.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "kernel_matrix",
    "kernel_matrix_derivative",
    "kernel_matrix_second_derivative",
    "kernel_divergence",
    "kernel_c",
    "kernel_c_closed_form",
    "kernel_c_oracle",
    "confirm_contraction_form",
]


def _check_gamma(gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return float(gamma)


def _pow(r: np.ndarray, p: float) -> np.ndarray:
    """r**p with the continuous-extension convention at r = 0."""
    if p == 0.0:
        return np.ones_like(r)
    if p > 0:
        return r ** p
    with np.errstate(divide="ignore"):
        return np.where(r > 0, r ** p, 0.0)


def kernel_matrix(z, gamma: float) -> np.ndarray:
    """a(z); input shape (..., 3), output (..., 3, 3)."""
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    rg = _pow(r, gamma)
    zz = z[..., :, None] * z[..., None, :]
    eye = np.eye(3)
    r2 = (r * r)[..., None, None]
    return eye * (rg * r * r)[..., None, None] - zz * rg[..., None, None] * np.ones_like(r2)


def kernel_matrix_derivative(z, gamma: float) -> np.ndarray:
    """d_{z_k} a_ij(z); output (..., 3, 3, 3) indexed [i, j, k]."""
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    rg = _pow(r, gamma)
    rgm2 = _pow(r, gamma - 2.0)
    eye = np.eye(3)
    zi = z[..., :, None, None]
    zj = z[..., None, :, None]
    zk = z[..., None, None, :]
    d_ij = eye[:, :, None]
    d_ik = eye[:, None, :]
    d_jk = eye[None, :, :]
    rg_ = rg[..., None, None, None]
    rgm2_ = rgm2[..., None, None, None]
    return (
        (gamma + 2.0) * d_ij * zk * rg_
        - (d_ik * zj + d_jk * zi) * rg_
        - gamma * zi * zj * zk * rgm2_
    )


def kernel_matrix_second_derivative(z, gamma: float) -> np.ndarray:
    """d2_{z_k z_l} a_ij(z); output (..., 3, 3, 3, 3) indexed [i, j, k, l]."""
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    rg = _pow(r, gamma)
    rgm2 = _pow(r, gamma - 2.0)
    rgm4 = _pow(r, gamma - 4.0)
    eye = np.eye(3)
    zi = z[..., :, None, None, None]
    zj = z[..., None, :, None, None]
    zk = z[..., None, None, :, None]
    zl = z[..., None, None, None, :]
    d_ij = eye[:, :, None, None]
    d_ik = eye[:, None, :, None]
    d_il = eye[:, None, None, :]
    d_jk = eye[None, :, :, None]
    d_jl = eye[None, :, None, :]
    d_kl = eye[None, None, :, :]
    rg_ = rg[..., None, None, None, None]
    rgm2_ = rgm2[..., None, None, None, None]
    rgm4_ = rgm4[..., None, None, None, None]
    return (
        (gamma + 2.0) * d_ij * (d_kl * rg_ + gamma * zk * zl * rgm2_)
        - (d_ik * d_jl + d_jk * d_il) * rg_
        - gamma * (d_ik * zj + d_jk * zi) * zl * rgm2_
        - gamma * ((d_il * zj + d_jl * zi) * zk + d_kl * zi * zj) * rgm2_
        - gamma * (gamma - 2.0) * zi * zj * zk * zl * rgm4_
    )


def kernel_divergence(z, gamma: float) -> np.ndarray:
    """b_i(z) = d_{z_j} a_ij(z) = -2 z_i |z|^gamma; output (..., 3)."""
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    return -2.0 * z * _pow(r, gamma)[..., None]


def kernel_c_closed_form(z, gamma: float) -> np.ndarray:
    """The oracle-confirmed closed form of the double contraction.

    Do not call directly in production paths; go through ``kernel_c`` so the
    finite-difference gate has run for this gamma.
    """
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    return -2.0 * (gamma + 3.0) * _pow(r, gamma)


def kernel_c_oracle(z, gamma: float, h: float = 1e-3) -> np.ndarray:
    """sum_{i,j} d2_{z_i z_j} a_ij by Richardson-extrapolated central
    differences of ``kernel_matrix``; independent of the closed form."""
    z = np.asarray(z, dtype=float)

    def second(zz, i, j, step):
        ei = np.zeros(3)
        ej = np.zeros(3)
        ei[i] = step
        ej[j] = step
        if i == j:
            num = (
                kernel_matrix(zz + ei, gamma)
                - 2.0 * kernel_matrix(zz, gamma)
                + kernel_matrix(zz - ei, gamma)
            )
            return num[..., i, j] / step ** 2
        num = (
            kernel_matrix(zz + ei + ej, gamma)
            - kernel_matrix(zz + ei - ej, gamma)
            - kernel_matrix(zz - ei + ej, gamma)
            + kernel_matrix(zz - ei - ej, gamma)
        )
        return num[..., i, j] / (4.0 * step ** 2)

    def contraction(step):
        out = np.zeros(z.shape[:-1])
        for i in range(3):
            for j in range(3):
                out = out + second(z, i, j, step)
        return out

    coarse = contraction(h)
    fine = contraction(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


_CONFIRMED_GAMMAS: set[float] = set()


def confirm_contraction_form(gamma: float, n_points: int = 64, rtol: float = 1e-6,
                             seed: int = 20) -> float:
    """Run the finite-difference gate for one gamma.

    Samples points away from z = 0, compares oracle to closed form, and
    records the confirmation.  Returns the worst relative deviation.
    """
    gamma = _check_gamma(gamma)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2.0, 2.0, size=(n_points, 3))
    radii = np.linalg.norm(pts, axis=-1, keepdims=True)
    pts = pts / radii * (0.3 + 1.7 * rng.random((n_points, 1)))  # |z| in [0.3, 2]
    oracle = kernel_c_oracle(pts, gamma)
    closed = kernel_c_closed_form(pts, gamma)
    scale = np.maximum(np.abs(closed), 1e-30)
    worst = float(np.max(np.abs(oracle - closed) / scale))
    if worst > rtol:
        raise AssertionError(
            f"closed form for the kernel contraction failed its oracle gate at "
            f"gamma={gamma}: relative deviation {worst:.3e} > {rtol:.1e}"
        )
    _CONFIRMED_GAMMAS.add(gamma)
    return worst


def kernel_c(z, gamma: float) -> np.ndarray:
    """Double contraction c(z) = d2_{z_i z_j} a_ij(z).

    On first use per gamma the closed form must pass the finite-difference
    oracle gate; afterwards evaluation is direct.  At z = 0 the value is the
    continuous limit: -2(gamma+3) for gamma = 0, else 0.
    """
    gamma = _check_gamma(gamma)
    if gamma not in _CONFIRMED_GAMMAS:
        confirm_contraction_form(gamma)
    return kernel_c_closed_form(z, gamma)
