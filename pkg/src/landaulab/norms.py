"""Weighted energy norms on the truncated phase-space grid.

The running quantities: per derivative pair (alpha, beta) the Y-norm
||<v>^omega d^alpha d^beta f||_{L2_x L2_v}, its X-variant with an extra
<v>^{1/2} weight (time-square-integrated), the combined energy norm
E^2 = sup_t Y_total^2 + int X_total^2 dt, and the ball norms that carry an
extra <v>^s weight and a cutoff offset l for boundary-term bookkeeping.

In spatially homogeneous mode the x-integral is the point evaluation
(measure 1), so all definitions stay dimension-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, GridSpec, derivative
from .multiindex import MultiIndex, enumerate_indices
from .weights import WeightHierarchy

__all__ = ["weighted_norm", "EnergyReport", "energy_report", "ball_norm",
           "ball_energy", "l2_norm"]


def l2_norm(f: Field, weight: np.ndarray | float = 1.0) -> float:
    g = f.grid
    w = weight if np.isscalar(weight) else g.broadcast_v(weight)
    sq = (f.values * w) ** 2
    return float(np.sqrt(sq.sum() * g.v_cell_volume * g.x_cell_measure))


def weighted_norm(
    f: Field,
    m: MultiIndex,
    hierarchy: WeightHierarchy,
    extra_weight: float = 0.0,
    psi: np.ndarray | None = None,
) -> float:
    """||<v>^{omega(m)+extra} d^m f * psi||_{L2_x L2_v}.

    ``extra_weight`` 1/2 gives the X-norm integrand, s/2 the ball-norm
    integrand; ``psi`` is an optional velocity cutoff sampled on the lattice.
    """
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field contains non-finite entries")
    w = hierarchy.weight(m) + extra_weight
    bracket = f.grid.bracket() ** w
    if psi is not None:
        bracket = bracket * psi
    df = derivative(f, m)
    return l2_norm(df, bracket)


@dataclass
class EnergyReport:
    """Norm values per derivative pair per snapshot plus assembled totals."""

    times: list[float]
    index_keys: list[str]
    y_values: dict[str, list[float]]  # Y per index per time
    x_values: dict[str, list[float]]  # X integrand per index per time
    y_total: list[float] = field(default_factory=list)
    x_total: list[float] = field(default_factory=list)
    y_sup: float = 0.0
    x_time_integral: float = 0.0  # sqrt(int X_total^2 dt)
    e_norm: float = 0.0  # sqrt(y_sup^2 + x_time_integral^2)
    ball: dict = field(default_factory=dict)
    boundary_decay: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "times": self.times,
            "index_keys": self.index_keys,
            "y_values": {k: self.y_values[k] for k in self.index_keys},
            "x_values": {k: self.x_values[k] for k in self.index_keys},
            "y_total": self.y_total,
            "x_total": self.x_total,
            "y_sup": self.y_sup,
            "x_time_integral": self.x_time_integral,
            "e_norm": self.e_norm,
            "ball": self.ball,
            "boundary_decay": self.boundary_decay,
        }


def trapezoid_time(series: np.ndarray, times: np.ndarray) -> float:
    if len(times) < 2:
        return 0.0
    return float(np.trapezoid(series, times))


def energy_report(
    trajectory: list[Field],
    hierarchy: WeightHierarchy,
    max_order: int,
    family=None,
    ball_specs: tuple[tuple[int, float, int], ...] = (),
) -> EnergyReport:
    """Evaluate the full norm hierarchy along a trajectory.

    ``ball_specs`` lists (m, s, l) triples of ball norms to evaluate per
    snapshot (requires a cutoff ``family``).
    """
    if not trajectory:
        raise ValueError("trajectory is empty")
    g = trajectory[0].grid
    if any(f.grid != g for f in trajectory):
        raise ValueError("trajectory mixes different grids")
    times = [f.time for f in trajectory]
    if len(times) > 1:
        steps = np.diff(times)
        if steps.min() <= 0 or np.ptp(steps) > 1e-9 * max(steps.max(), 1.0):
            raise ValueError("trajectory times must be uniformly increasing")
    indices = [m for m in enumerate_indices(max_order)]
    keys = [m.key() for m in indices]
    y_values = {k: [] for k in keys}
    x_values = {k: [] for k in keys}
    report = EnergyReport(times=times, index_keys=keys, y_values=y_values,
                          x_values=x_values)
    bracket = g.bracket()
    half = np.sqrt(bracket)
    for f in trajectory:
        ysq = 0.0
        xsq = 0.0
        for m, k in zip(indices, keys):
            df = derivative(f, m)
            wfield = bracket ** hierarchy.weight(m)
            y = l2_norm(df, wfield)
            x = l2_norm(df, wfield * half)
            y_values[k].append(y)
            x_values[k].append(x)
            ysq += y * y
            xsq += x * x
        report.y_total.append(float(np.sqrt(ysq)))
        report.x_total.append(float(np.sqrt(xsq)))
        report.boundary_decay.append(f.boundary_decay())
    times_a = np.asarray(times)
    report.y_sup = float(max(report.y_total))
    report.x_time_integral = float(
        np.sqrt(trapezoid_time(np.asarray(report.x_total) ** 2, times_a))
    )
    report.e_norm = float(np.sqrt(report.y_sup ** 2 + report.x_time_integral ** 2))
    if ball_specs:
        if family is None:
            raise ValueError("ball norms require a cutoff family")
        for (m_ord, s, l) in ball_specs:
            key = f"ball_m{m_ord}_s{s:g}_l{l}"
            report.ball[key] = [
                ball_norm(f, hierarchy, family, m_ord, s, l) for f in trajectory
            ]
    return report


def ball_norm(
    f: Field,
    hierarchy: WeightHierarchy,
    family,
    m: int,
    s: float,
    l: int,
) -> float:
    """Cutoff-localized norm: sum over |alpha|+|beta| <= m of
    ||<v>^{2 omega} <v>^s (d f)^2 psi_{i-l}^2||_{L1};  returns the square root.

    The cutoff index is clamped at 0 (psi_0 == 1), matching the convention
    that boundary terms are absent at derivative order zero.
    """
    total = 0.0
    for idx in enumerate_indices(m):
        level = max(idx.order - l, 0)
        psi = family.on_grid(f.grid, level)
        total += weighted_norm(f, idx, hierarchy, extra_weight=s / 2.0, psi=psi) ** 2
    return float(np.sqrt(total))


def ball_energy(
    trajectory: list[Field],
    hierarchy: WeightHierarchy,
    family,
    m: int,
) -> float:
    """sup_t of the (m,0,0) ball norm combined with the time-integrated
    (m,1,0) ball norm, mirroring the global energy norm on the cutoff ball."""
    times = np.asarray([f.time for f in trajectory])
    y0 = np.asarray([ball_norm(f, hierarchy, family, m, 0.0, 0) for f in trajectory])
    y1 = np.asarray([ball_norm(f, hierarchy, family, m, 1.0, 0) for f in trajectory])
    return float(np.sqrt(y0.max() ** 2 + trapezoid_time(y1 ** 2, times)))
