"""Numerical verification of the pointwise coefficient bounds.

Each bound majorizes a derivative of a collision coefficient by an explicit
velocity integral of |d^alpha d^beta f| (or, in the sup-norm variants, by a
weighted L2 norm of the exponentially tilted input).  The verifier computes
both sides on the grid, samples the ratio LHS/RHS at random points, and
reports the largest ratio per bound: the empirical constant.  A ratio with
vanishing RHS but nonvanishing LHS is flagged as a violation.

Also checked: the interpolation inequality ||h||_{L1_v} <= C ||<v>^2
h||_{L2_v}, whose sharp whole-space constant is sqrt(int <v>^-4 dv) = pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import KernelTables, _conv_field, abar_derived, cbar
from .grid import Field, derivative
from .multiindex import MultiIndex, ZERO_INDEX, enumerate_indices
from .norms import l2_norm
from .weights import ModelParams, WeightHierarchy

__all__ = ["BoundCheck", "BoundReport", "verify_coefficient_bounds",
           "interpolation_constant_box"]

_TINY = 1e-300


@dataclass
class BoundCheck:
    name: str
    index: str
    max_ratio: float
    sample_count: int
    worst_point: list
    violation: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "index": self.index,
            "max_ratio": self.max_ratio,
            "sample_count": self.sample_count,
            "worst_point": self.worst_point,
            "violation": self.violation,
        }


@dataclass
class BoundReport:
    gamma: float
    d0: float
    grid: dict
    checks: list = field(default_factory=list)
    interpolation: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(c.violation for c in self.checks) and all(
            np.isfinite(c.max_ratio) for c in self.checks
        )

    def max_constant(self) -> float:
        return max((c.max_ratio for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "d0": self.d0,
            "grid": self.grid,
            "passed": self.passed,
            "max_constant": self.max_constant(),
            "checks": [c.to_dict() for c in self.checks],
            "interpolation": self.interpolation,
        }


def _v_moment_per_x(f: Field, weight_v: np.ndarray) -> np.ndarray:
    vax = tuple(range(f.grid.x_axes, f.grid.ndim))
    return (np.abs(f.values) * f.grid.broadcast_v(weight_v)).sum(axis=vax) \
        * f.grid.v_cell_volume


def _abs_conv(f: Field, kernel_name: str, gamma: float, engine: str) -> np.ndarray:
    """Convolution of a nonnegative majorant kernel against |f|."""
    absf = f.with_values(np.abs(f.values))
    return _conv_field(absf, kernel_name, gamma, engine)[0]


def _product_derivative(f: Field, m: MultiIndex, gamma: float, engine: str,
                        factor: str, extra_v: MultiIndex | None = None) -> np.ndarray:
    """|d^alpha d^beta (abar * velocity-factor)| with x-derivatives moved onto
    f exactly and v-derivatives applied to the assembled product on the grid.

    factor: 'v' for v_i/<v> contraction (returns max over the free index) or
    'vv' for the full v_i v_j/<v>^2 contraction.
    """
    g = f.grid
    dxf = derivative(f, MultiIndex(m.alpha, (0, 0, 0)))
    contraction = {"v": "v_over_bracket", "vv": "vv_over_bracket2"}[factor]
    prod = abar_derived(dxf, ZERO_INDEX, 0, contraction, gamma, engine)
    vm = MultiIndex((0, 0, 0), m.beta) if extra_v is None else MultiIndex(
        (0, 0, 0), tuple(b + e for b, e in zip(m.beta, extra_v.beta)))
    if factor == "v":
        outs = []
        for j in range(3):
            comp = Field(g, prod[..., j], f.time)
            outs.append(np.abs(derivative(comp, vm).values))
        return np.max(outs, axis=0)
    comp = Field(g, prod, f.time)
    return np.abs(derivative(comp, vm).values)


def _y_v_norm_per_x(h_tilted: Field, hierarchy: WeightHierarchy, order: int) -> np.ndarray:
    """||.||_{Y^order_v} per spatial point of the tilted input."""
    g = h_tilted.grid
    vax = tuple(range(g.x_axes, g.ndim))
    total = np.zeros(g.shape[: g.x_axes])
    for idx in enumerate_indices(order):
        if sum(idx.alpha) > 0:
            continue  # Y_v is a velocity norm; x-derivatives do not enter
        w = g.bracket() ** hierarchy.weight(idx)
        d = derivative(h_tilted, idx).values
        total = total + ((d * g.broadcast_v(w)) ** 2).sum(axis=vax) * g.v_cell_volume
    return np.sqrt(total)


def interpolation_constant_box(f: Field) -> float:
    """||f||_{L1_v} / ||<v>^2 f||_{L2_v}, maximized over spatial points."""
    g = f.grid
    vax = tuple(range(g.x_axes, g.ndim))
    l1 = np.abs(f.values).sum(axis=vax) * g.v_cell_volume
    w = g.broadcast_v(g.bracket() ** 2)
    l2 = np.sqrt(((f.values * w) ** 2).sum(axis=vax) * g.v_cell_volume)
    ratio = l1 / np.maximum(l2, _TINY)
    return float(ratio.max())


def verify_coefficient_bounds(
    f: Field,
    gamma: float,
    sample_count: int = 200,
    orders: list[MultiIndex] | None = None,
    d0: float = 1.0,
    engine: str = "fft",
    seed: int = 0,
) -> BoundReport:
    """Measure the empirical constant of every pointwise coefficient bound.

    ``orders`` lists the derivative pairs (alpha, beta) to exercise; the
    default covers the zeroth pair, one v-derivative, a mixed second
    v-derivative, and one x-derivative when space is active.
    """
    g = f.grid
    if orders is None:
        orders = [ZERO_INDEX, MultiIndex(beta=(1, 0, 0)), MultiIndex(beta=(1, 1, 0))]
        if g.x_axes:
            orders.append(MultiIndex(alpha=(1, 0, 0)))
    rng = np.random.default_rng(seed)
    flat_n = int(np.prod(g.shape))
    samples = rng.choice(flat_n, size=min(sample_count, flat_n), replace=False)
    report = BoundReport(
        gamma=gamma,
        d0=d0,
        grid={"v_count": g.v_count, "v_extent": g.v_extent, "x_axes": g.x_axes,
              "x_count": g.x_count},
    )
    bracket = g.broadcast_v(g.bracket())
    hierarchy = WeightHierarchy.main(ModelParams(gamma if gamma < 1 else 1.0))
    tilt = np.exp(d0 * g.bracket())
    h_tilted = f.with_values(f.values * g.broadcast_v(tilt))

    def add(name, idx, lhs, rhs):
        lhs_s = lhs.reshape(-1)[samples]
        rhs_s = rhs.reshape(-1)[samples] if rhs.size == lhs.size else None
        if rhs_s is None:  # rhs constant per spatial point, broadcast
            rhs_b = np.broadcast_to(
                rhs.reshape(rhs.shape + (1,) * (lhs.ndim - rhs.ndim)), lhs.shape
            )
            rhs_s = rhs_b.reshape(-1)[samples]
        live = rhs_s > 1e-14 * max(float(rhs_s.max()), _TINY)
        violation = bool(np.any(~live & (lhs_s > 1e-12 * max(float(lhs_s.max()), _TINY))))
        if not np.any(live):
            report.checks.append(BoundCheck(name, idx.key(), 0.0, 0, [], violation))
            return
        ratios = lhs_s[live] / rhs_s[live]
        worst = int(np.argmax(ratios))
        worst_flat = samples[np.nonzero(live)[0][worst]]
        coords = np.unravel_index(worst_flat, g.shape)
        report.checks.append(
            BoundCheck(name, idx.key(), float(ratios.max()), int(live.sum()),
                       [int(c) for c in coords], violation)
        )

    for m in orders:
        dm = derivative(f, m)
        dabs = dm.with_values(np.abs(dm.values))
        mom_r2 = _abs_conv(dm, "r2pg", gamma, engine)
        mom_r1 = _abs_conv(dm, "r1pg", gamma, engine)
        mom_r0 = _abs_conv(dm, "rg", gamma, engine)
        bw2 = _v_moment_per_x(dm, g.bracket() ** (2.0 + gamma))
        bw4 = _v_moment_per_x(dm, g.bracket() ** 4)

        a_full = abar_derived(f, m, 0, "plain", gamma, engine)
        add("a_plain", m, np.abs(a_full).max(axis=(-2, -1)), mom_r2)

        add("a_v", m, _product_derivative(f, m, gamma, engine, "v"),
            bracket ** (1.0 + gamma) * _bx(bw2, g))
        add("a_vv", m, _product_derivative(f, m, gamma, engine, "vv"),
            bracket ** gamma * _bx(bw4, g))

        da_full = abar_derived(f, m, 1, "plain", gamma, engine)
        add("a_first_derivative", m, np.abs(da_full).max(axis=(-3, -2, -1)), mom_r1)

        add("a_v_first_derivative", m,
            _product_derivative(f, m, gamma, engine, "v",
                                extra_v=MultiIndex(beta=(1, 0, 0))),
            bracket ** gamma * _bx(bw2, g))

        d2a_full = abar_derived(f, m, 2, "plain", gamma, engine)
        add("a_second_derivative", m, np.abs(d2a_full).max(axis=(-4, -3, -2, -1)),
            mom_r0)

        c_field = cbar(dm, gamma, engine)
        add("c_plain", m, np.abs(c_field), mom_r0)

        # sup-norm variants against the weighted L2 norm of the tilted input
        order_cap = min(m.order, hierarchy.max_order)
        yv = _y_v_norm_per_x(h_tilted, hierarchy, order_cap)
        sup_a = np.abs(a_full).max(axis=(-2, -1)) * bracket ** (-2.0 - gamma)
        add("sup_a_vs_energy", m, sup_a, _bx(yv, g))
        sup_c = np.abs(c_field) * bracket ** (-gamma)
        add("sup_c_vs_energy", m, sup_c, _bx(yv, g))

    box_c = interpolation_constant_box(f)
    report.interpolation = {
        "max_ratio": box_c,
        "whole_space_constant": float(np.pi),
        "within_whole_space": bool(box_c <= np.pi),
    }
    return report


def _bx(per_x: np.ndarray, g) -> np.ndarray:
    """Broadcast a per-spatial-point scalar over the velocity axes."""
    return per_x.reshape(per_x.shape + (1, 1, 1))
