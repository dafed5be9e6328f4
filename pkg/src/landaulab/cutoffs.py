"""Velocity cutoff hierarchy, joint phase-space cutoff, and mollifier.

The velocity cutoffs are nested radial ramps psi_m(v) = psi(2^m v / R):
identically 1 for |v| <= R/2^m, identically 0 for |v| >= (11/10) R/2^m,
with a quintic (smoothstep) profile in between so the ramp is C^2 at both
ends.  Level 0 is the constant 1 on the working domain.  The gradient of
psi_m is supported where psi_{m-1} = 1 because consecutive plateau radii
differ by a factor 2 > 11/10.

The joint cutoff chi_L lives on the phase-space radius |(x, v)| and ramps
from 1 (inside L-2) to 0 (outside L-1).  The mollifier is a separable
product of compactly supported quintic bumps, normalized discretely so unit
mass holds exactly on the lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Field, GridSpec

__all__ = ["CutoffFamily", "MollifierSpec", "mollify", "chi", "smooth_ramp"]

RAMP_UPPER = 1.1  # support edge of the unit-radius ramp


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: 0 -> 1 on [0, 1] with vanishing first and second
    derivatives at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def smooth_ramp(r: np.ndarray | float) -> np.ndarray:
    """Radial profile: 1 for r <= 1, 0 for r >= 11/10, C^2 in between."""
    r = np.asarray(r, dtype=float)
    u = (r - 1.0) / (RAMP_UPPER - 1.0)
    return 1.0 - _smoothstep(u)


@dataclass(frozen=True)
class CutoffFamily:
    """The nested velocity cutoffs psi_0, ..., psi_max_level."""

    R: float
    max_level: int = 10

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if not 0 <= self.max_level <= 10:
            raise ValueError("max_level must lie in [0, 10]")

    def radius(self, m: int) -> float:
        """Plateau radius of level m."""
        return self.R / 2 ** m

    def psi(self, m: int, v) -> np.ndarray:
        """psi_m at velocity points (..., 3)."""
        if not 0 <= m <= self.max_level:
            raise ValueError(f"cutoff level {m} outside [0, {self.max_level}]")
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v, axis=-1)
        if m == 0:
            return np.ones_like(r)
        return smooth_ramp(r / self.radius(m))

    def psi_radial(self, m: int, r) -> np.ndarray:
        if not 0 <= m <= self.max_level:
            raise ValueError(f"cutoff level {m} outside [0, {self.max_level}]")
        r = np.asarray(r, dtype=float)
        if m == 0:
            return np.ones_like(r)
        return smooth_ramp(r / self.radius(m))

    def on_grid(self, grid: GridSpec, m: int) -> np.ndarray:
        """psi_m sampled on the velocity lattice, cached; (Nv, Nv, Nv)."""
        return _psi_on_grid(self.R, self.max_level, m, grid.v_count, grid.v_extent)

    def _profile_d1(self, m: int, r: np.ndarray) -> np.ndarray:
        """|d/dr psi_m| analytically: the ramp is sharper than any desk grid,
        so derivative magnitudes must never be finite-differenced."""
        rho = self.radius(m)
        u = (r / rho - 1.0) / (RAMP_UPPER - 1.0)
        inside = (u > 0.0) & (u < 1.0)
        du = 30.0 * u ** 2 * (1.0 - u) ** 2
        return np.where(inside, du / ((RAMP_UPPER - 1.0) * rho), 0.0)

    def _profile_d2(self, m: int, r: np.ndarray) -> np.ndarray:
        """Pointwise bound on max_ij |d2_{v_i v_j} psi_m|: radial curvature
        plus the tangential slope/r term."""
        rho = self.radius(m)
        u = (r / rho - 1.0) / (RAMP_UPPER - 1.0)
        inside = (u > 0.0) & (u < 1.0)
        d2u = np.abs(60.0 * u - 180.0 * u ** 2 + 120.0 * u ** 3)
        radial = np.where(inside, d2u / (((RAMP_UPPER - 1.0) * rho) ** 2), 0.0)
        tangential = self._profile_d1(m, r) / np.maximum(r, 1e-12)
        return radial + tangential

    def gradient_envelope_on_grid(self, grid: GridSpec, m: int) -> np.ndarray:
        """Per-cell supremum of |grad psi_m|: each lattice point reports the
        largest gradient magnitude its quadrature cell can see, so thin ramp
        annuli are majorized instead of aliased."""
        return self._envelope_on_grid(grid, m, self._profile_d1)

    def hessian_envelope_on_grid(self, grid: GridSpec, m: int) -> np.ndarray:
        """Per-cell supremum of the second-derivative bound of psi_m."""
        return self._envelope_on_grid(grid, m, self._profile_d2)

    def _envelope_on_grid(self, grid: GridSpec, m: int, profile) -> np.ndarray:
        if m == 0:
            return np.zeros((grid.v_count,) * 3)
        r_max = grid.v_extent * np.sqrt(3.0) + grid.h_v
        n_table = 4096
        rr = np.linspace(0.0, r_max, n_table)
        vals = profile(m, rr)
        delta = grid.h_v * np.sqrt(3.0) / 2.0
        win = max(1, int(np.ceil(delta / (rr[1] - rr[0]))))
        # sliding-window maximum over +/- delta
        padded = np.pad(vals, win, mode="edge")
        env = np.max(
            np.lib.stride_tricks.sliding_window_view(padded, 2 * win + 1), axis=-1
        )
        r_lattice = np.sqrt(
            sum(c ** 2 for c in np.meshgrid(grid.v_axis, grid.v_axis, grid.v_axis,
                                            indexing="ij"))
        )
        return np.interp(r_lattice, rr, env)

    def derivative_report(self, m: int, samples: int = 4001) -> dict:
        """Measured derivative magnitudes of psi_m and support containment.

        The scaled slope sup|psi_m'| * R/2^m and curvature sup|psi_m''| *
        (R/2^m)^2 are level-independent profile constants; the gradient
        support is contained in the plateau of the previous level exactly.
        """
        if m < 1:
            raise ValueError("derivative report needs m >= 1")
        rm = self.radius(m)
        r = np.linspace(0.0, RAMP_UPPER * rm * 1.2, samples)
        h = r[1] - r[0]
        vals = self.psi_radial(m, r)
        d1 = np.gradient(vals, h)
        d2 = np.gradient(d1, h)
        grad_support = np.abs(d1) > 1e-12
        prev_plateau = vals_prev = self.psi_radial(m - 1, r) if m >= 1 else np.ones_like(r)
        contained = bool(np.all(vals_prev[grad_support] > 1.0 - 1e-12))
        monotone = bool(np.all(np.diff(vals) <= 1e-12))
        return {
            "level": m,
            "sup_grad": float(np.abs(d1).max()),
            "sup_grad_scaled": float(np.abs(d1).max() * rm),
            "sup_hess": float(np.abs(d2).max()),
            "sup_hess_scaled": float(np.abs(d2).max() * rm * rm),
            "grad_inside_previous_plateau": contained,
            "radially_monotone": monotone,
        }


@lru_cache(maxsize=128)
def _psi_on_grid(R: float, max_level: int, m: int, v_count: int, v_extent: float) -> np.ndarray:
    fam = CutoffFamily(R, max_level)
    ax = -v_extent + (np.arange(v_count) + 0.5) * (2.0 * v_extent / v_count)
    v1, v2, v3 = np.meshgrid(ax, ax, ax, indexing="ij")
    r = np.sqrt(v1 * v1 + v2 * v2 + v3 * v3)
    out = fam.psi_radial(m, r)
    out.flags.writeable = False
    return out


def chi(L: float, point) -> np.ndarray:
    """Joint phase-space cutoff: 1 inside radius L-2, 0 outside L-1.

    ``point`` has shape (..., 6) = (x, v).  The ramp is the C^2 quintic, so
    the measured first-derivative bound is 15/8 < 2.
    """
    if L <= 3:
        raise ValueError("chi needs L > 3 so the plateau is nonempty")
    p = np.asarray(point, dtype=float)
    rho = np.linalg.norm(p, axis=-1)
    return 1.0 - _smoothstep(rho - (L - 2.0))


@dataclass(frozen=True)
class MollifierSpec:
    """Separable compact bump of smoothing radius epsilon (one radius for
    every active axis)."""

    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def profile(self, u: np.ndarray) -> np.ndarray:
        """Unnormalized 1-D bump supported on [-1, 1], C^4 at the edges."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = (1.0 - u[inside] ** 2) ** 5
        return out

    def stencil(self, h: float) -> np.ndarray:
        """Discrete 1-D kernel on spacing h, normalized to unit sum exactly."""
        half = int(np.floor(self.epsilon / h))
        if half < 2:
            raise ValueError(
                f"epsilon {self.epsilon} spans fewer than 2 grid spacings (h={h})"
            )
        u = np.arange(-half, half + 1) * h / self.epsilon
        w = self.profile(u)
        return w / w.sum()


def _convolve_axis(values: np.ndarray, kernel: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    n = values.shape[axis]
    half = len(kernel) // 2
    out = np.zeros_like(values)
    for s, w in zip(range(-half, half + 1), kernel):
        if periodic:
            out += w * np.roll(values, -s, axis=axis)
        else:
            shifted = np.zeros_like(values)
            src = [slice(None)] * values.ndim
            dst = [slice(None)] * values.ndim
            if s >= 0:
                src[axis] = slice(s, n)
                dst[axis] = slice(0, n - s)
            else:
                src[axis] = slice(0, n + s)
                dst[axis] = slice(-s, n)
            shifted[tuple(dst)] = values[tuple(src)]
            out += w * shifted
    return out


def mollify(f: Field, spec: MollifierSpec) -> Field:
    """Smooth f by the separable bump over every active axis.

    Periodic wrap in x; zero extension in v (fields are assumed to have
    decayed at the box faces, which the boundary diagnostic monitors).  The
    discrete kernel sums to 1 exactly, so constants are fixed points and
    mass is conserved up to the v-face leakage.
    """
    g = f.grid
    vals = f.values
    if g.x_axes:
        kx = spec.stencil(g.h_x)
        if len(kx) > g.x_count:
            raise ValueError("mollifier wider than the periodic box")
        for axis in range(g.x_axes):
            vals = _convolve_axis(vals, kx, axis, periodic=True)
    kv = spec.stencil(g.h_v)
    if len(kv) > g.v_count:
        raise ValueError("mollifier wider than the velocity box")
    for axis in range(g.x_axes, g.ndim):
        vals = _convolve_axis(vals, kv, axis, periodic=False)
    return f.with_values(vals)
