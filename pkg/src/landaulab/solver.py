"""Time integration of the linearized viscous problem and its error ledger.

The damped unknown is G = e^{d(t)<v>} F with d(t) = d0 - kappa*t; F solves
the collision equation with viscosity (transport + eps*Laplacian +
anisotropic diffusion + reaction), and G picks up the damping term
kappa<v>G plus drift/zeroth-order terms from the conjugation.

The stepper advances F, not G: upwind transport, a directionally split
anisotropic diffusion stencil with nonnegative weights, and the reaction
term -cbar*F (nonnegative for nonnegative linearization input) make the
explicit update a convex combination under the CFL bound, so nonnegativity
of F is structural rather than accidental; G is recovered with the updated
multiplier, which treats the kappa<v> damping exactly.  The G-space right
side is also assembled verbatim (``rhs_linearized``) for cross-checks and
residual evaluation.

The split stencil resolves the diffusion matrix into second differences
along the 13 lattice directions {e_i, e_i +/- e_j}; where diagonal dominance
fails the axis weight is clipped at zero, adding a small spurious axis
diffusion there (the price of a sign-structured stencil).  A plain central
assembly is kept for comparisons and for the verbatim right side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientField, abar, abar_derived, cbar
from .cutoffs import CutoffFamily
from .grid import Field, GridSpec, derivative
from .multiindex import MultiIndex, ZERO_INDEX, enumerate_indices
from .norms import EnergyReport, energy_report, l2_norm, trapezoid_time
from .weights import ModelParams, WeightHierarchy

__all__ = [
    "ExponentialWeight", "SolverConfig", "SolveResult", "TermLedger",
    "LEDGER_TERMS", "to_g", "to_f", "rhs_linearized", "step",
    "solve_linearized", "stability_dt", "boundary_decay_audit",
    "SolverInstability", "Linearization",
]

LEDGER_TERMS = (
    "A1", "A2", "A3", "B1", "B2", "B3", "B4", "B5",
    "T1", "T2", "T3_1", "T3_2", "T3_3", "T4", "T5_1", "T5_2", "T6_1", "T6_2",
)

_EXP_CAP = 700.0  # log of float64 overflow


class SolverInstability(RuntimeError):
    def __init__(self, message, ledger=None, energy=None):
        super().__init__(message)
        self.ledger = ledger
        self.energy = energy


@dataclass(frozen=True)
class ExponentialWeight:
    """d(t) = d0 - kappa * t on [0, T0], T0 = d0/(2 kappa), so the rate
    never drops below d0/2."""

    d0: float
    kappa: float

    def __post_init__(self):
        if self.d0 <= 0 or self.kappa <= 0:
            raise ValueError("d0 and kappa must be positive")

    @property
    def T0(self) -> float:
        return self.d0 / (2.0 * self.kappa)

    def rate(self, t: float) -> float:
        if t < -1e-12 or t > self.T0 * (1 + 1e-12):
            raise ValueError(f"t={t} outside [0, T0={self.T0}]")
        return self.d0 - self.kappa * t


def _exp_multiplier(grid: GridSpec, d: float, sign: float) -> np.ndarray:
    arg = sign * d * grid.bracket()
    peak = float(arg.max())
    if peak > _EXP_CAP:
        worst = float(grid.bracket().max())
        raise OverflowError(
            f"exponential weight overflows: d*<v> = {peak:.1f} at <v> = {worst:.2f}"
        )
    return np.exp(arg)


def to_g(f: Field, w: ExponentialWeight, t: float) -> Field:
    """g = e^{d(t)<v>} f."""
    mult = _exp_multiplier(f.grid, w.rate(t), +1.0)
    vals = f.values * f.grid.broadcast_v(mult)
    if not np.all(np.isfinite(vals)):
        raise OverflowError("exponential transform produced non-finite values")
    return Field(f.grid, vals, t)


def to_f(g: Field, w: ExponentialWeight, t: float) -> Field:
    """f = e^{-d(t)<v>} g."""
    mult = _exp_multiplier(g.grid, w.rate(t), -1.0)
    return Field(g.grid, g.values * g.grid.broadcast_v(mult), t)


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams
    weight: ExponentialWeight
    R: float
    epsilon: float = 1e-3
    dt: float | None = None
    scheme: str = "explicit"  # 'explicit' | 'imex'
    transport: str = "upwind"  # 'upwind' | 'centered'
    diffusion: str = "split"  # stepper stencil: 'split' | 'central'
    max_derivative_order: int = 2
    engine: str = "fft"
    zeroth_order_variant: str = "bracket"  # '(d+1/<v>)' as displayed; 'one' for (d+1)
    dirichlet_outside_support: bool = True
    cfl_safety: float = 0.4
    instability_cap: float = 200.0  # growth-rate cap for the runaway monitor

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.scheme not in ("explicit", "imex"):
            raise ValueError("scheme must be 'explicit' or 'imex'")
        if self.transport not in ("upwind", "centered"):
            raise ValueError("transport must be 'upwind' or 'centered'")
        if self.diffusion not in ("split", "central"):
            raise ValueError("diffusion must be 'split' or 'central'")
        if self.zeroth_order_variant not in ("bracket", "one"):
            raise ValueError("zeroth_order_variant must be 'bracket' or 'one'")

    def validate_against(self, grid: GridSpec) -> None:
        if self.R > grid.v_extent / 1.2 + 1e-12:
            raise ValueError(
                f"R={self.R} too large: the outermost cutoff support must stay "
                f"inside the box (need R <= v_extent/1.2 = {grid.v_extent / 1.2:.3f})"
            )


def stability_dt(config: SolverConfig, grid: GridSpec, coeffs: CoefficientField) -> float:
    """Explicit-step bound: cfl_safety times the tightest of the parabolic,
    transport and damping restrictions.  IMEX relaxes the parabolic term."""
    amax = coeffs.max_matrix_norm()
    eps = config.epsilon
    terms = []
    denom = 6.0 * amax + 6.0 * eps
    parabolic = grid.h_v ** 2 / denom if denom > 0 else np.inf
    terms.append(parabolic if config.scheme == "explicit" else 10.0 * parabolic)
    if grid.x_axes:
        vmax = float(np.abs(grid.v_axis).max()) * np.sqrt(3.0)
        terms.append(grid.h_x / vmax)
    terms.append(1.0 / (config.weight.kappa * float(grid.bracket().max())))
    return config.cfl_safety * float(min(terms))


# --------------------------------------------------------------------------
# Stencil helpers (velocity axes zero-extended, x axes periodic)
# --------------------------------------------------------------------------


def _shift_v(values: np.ndarray, grid: GridSpec, offset: tuple[int, int, int]) -> np.ndarray:
    out = values
    for j, s in enumerate(offset):
        if s == 0:
            continue
        axis = grid.x_axes + j
        shifted = np.zeros_like(out)
        n = out.shape[axis]
        src = [slice(None)] * out.ndim
        dst = [slice(None)] * out.ndim
        if s > 0:
            src[axis] = slice(s, n)
            dst[axis] = slice(0, n - s)
        else:
            src[axis] = slice(0, n + s)
            dst[axis] = slice(-s, n)
        shifted[tuple(dst)] = out[tuple(src)]
        out = shifted
    return out


_PAIRS = ((0, 1), (0, 2), (1, 2))


def split_weights(coeffs_abar: np.ndarray, h: float) -> dict:
    """Nonnegative weights of the 13-direction second-difference resolution
    of the diffusion matrix; exact wherever the matrix is diagonally
    dominant."""
    w = {}
    h2 = h * h
    for (i, j) in _PAIRS:
        aij = coeffs_abar[..., i, j]
        w[("plus", i, j)] = np.maximum(aij, 0.0) / h2
        w[("minus", i, j)] = np.maximum(-aij, 0.0) / h2
    for i in range(3):
        off = sum(np.abs(coeffs_abar[..., i, j]) for j in range(3) if j != i)
        w[("axis", i)] = np.maximum(coeffs_abar[..., i, i] - off, 0.0) / h2
    return w


def _split_diffusion(Fv: np.ndarray, grid: GridSpec, w: dict) -> np.ndarray:
    out = np.zeros_like(Fv)
    for i in range(3):
        off = tuple(1 if k == i else 0 for k in range(3))
        neg = tuple(-o for o in off)
        out += w[("axis", i)] * (_shift_v(Fv, grid, off) - 2.0 * Fv + _shift_v(Fv, grid, neg))
    for (i, j) in _PAIRS:
        for sign, key in ((1, ("plus", i, j)), (-1, ("minus", i, j))):
            off = tuple((1 if k == i else 0) + sign * (1 if k == j else 0) for k in range(3))
            neg = tuple(-o for o in off)
            out += w[key] * (_shift_v(Fv, grid, off) - 2.0 * Fv + _shift_v(Fv, grid, neg))
    return out


def _central_diffusion(F: Field, coeffs_abar: np.ndarray) -> np.ndarray:
    out = np.zeros_like(F.values)
    for i in range(3):
        for j in range(i, 3):
            if i == j:
                beta = tuple(2 if k == i else 0 for k in range(3))
                factor = 1.0
            else:
                beta = tuple((1 if k == i else 0) + (1 if k == j else 0) for k in range(3))
                factor = 2.0
            d2 = derivative(F, MultiIndex(beta=beta)).values
            out += factor * coeffs_abar[..., i, j] * d2
    return out


def _laplace(F: Field) -> np.ndarray:
    g = F.grid
    out = np.zeros_like(F.values)
    for axis in range(g.ndim):
        if axis < g.x_axes:
            h = g.h_x
            out += (np.roll(F.values, -1, axis) - 2 * F.values + np.roll(F.values, 1, axis)) / h ** 2
        else:
            h = g.h_v
            off = tuple(1 if k == axis - g.x_axes else 0 for k in range(3))
            neg = tuple(-o for o in off)
            up = _shift_v(F.values, g, off)
            dn = _shift_v(F.values, g, neg)
            out += (up - 2 * F.values + dn) / h ** 2
    return out


def _transport(F: Field, mode: str) -> np.ndarray:
    """v . grad_x F; upwind (sign-split one-sided) or centered."""
    g = F.grid
    if g.x_axes == 0:
        return np.zeros_like(F.values)
    out = np.zeros_like(F.values)
    for axis in range(g.x_axes):
        vshape = [1] * g.ndim
        vshape[g.x_axes + axis] = g.v_count
        v = g.v_axis.reshape(vshape)
        if mode == "centered":
            dF = (np.roll(F.values, -1, axis) - np.roll(F.values, 1, axis)) / (2 * g.h_x)
            out += v * dF
        else:
            back = (F.values - np.roll(F.values, 1, axis)) / g.h_x
            fwd = (np.roll(F.values, -1, axis) - F.values) / g.h_x
            out += np.where(v > 0, v * back, v * fwd)
    return out


# --------------------------------------------------------------------------
# G-space right side (verbatim assembly, for diagnostics and residuals)
# --------------------------------------------------------------------------


def rhs_linearized(G: Field, coeffs: CoefficientField, config: SolverConfig,
                   t: float) -> Field:
    """dG/dt: diffusion + reaction + drift + zeroth-order conjugation terms,
    minus upwind transport and minus the kappa<v> damping.

    With vanishing linearization input and epsilon this reduces to pure
    damped transport.
    """
    if not np.all(np.isfinite(G.values)):
        raise FloatingPointError("non-finite values entered the right-side assembly")
    g = G.grid
    d = config.weight.rate(t)
    eps = config.epsilon
    bracket = g.broadcast_v(g.bracket())
    v1, v2, v3 = g.v_mesh()
    vvec = [g.broadcast_v(c) for c in (v1, v2, v3)]

    out = -_transport(G, config.transport)
    out -= config.weight.kappa * bracket * G.values
    out += _central_diffusion(G, coeffs.abar)
    out -= coeffs.cbar * G.values
    if eps:
        out += eps * _laplace(G)

    # drift: -2 d(t) (abar + eps I)_{ij} (v_i/<v>) d_{v_j} G
    for j in range(3):
        sj = eps * vvec[j] / bracket
        for i in range(3):
            sj = sj + coeffs.abar[..., i, j] * vvec[i] / bracket
        out -= 2.0 * d * sj * derivative(G, MultiIndex(beta=_e(j))).values

    # zeroth order: -d(t) (delta_ij/<v> - (d + 1/<v>) v_i v_j/<v>^2)(abar + eps I)
    trace = coeffs.trace + 3.0 * eps
    vav = eps * sum(vv * vv for vv in vvec)
    for i in range(3):
        for j in range(3):
            vav = vav + vvec[i] * coeffs.abar[..., i, j] * vvec[j]
    dplus = d + 1.0 / bracket if config.zeroth_order_variant == "bracket" else d + 1.0
    out -= d * (trace / bracket - dplus * vav / bracket ** 2) * G.values

    if not np.all(np.isfinite(out)):
        raise FloatingPointError("right-side assembly produced non-finite values")
    return Field(g, out, t)


# --------------------------------------------------------------------------
# Stepping
# --------------------------------------------------------------------------


class Linearization:
    """Coefficient provider: static field or snapshot trajectory, with the
    convolved coefficients interpolated linearly in time (convolution is
    linear in the input, so interpolating coefficients equals interpolating
    the input)."""

    def __init__(self, h, gamma: float, engine: str):
        self.snapshots = [h] if isinstance(h, Field) else list(h)
        if not self.snapshots:
            raise ValueError("empty linearization trajectory")
        for s in self.snapshots:
            peak = max(float(np.abs(s.values).max()), 1e-300)
            if float(s.values.min()) < -1e-12 * peak:
                raise ValueError("linearization input must be nonnegative")
        self.times = [s.time for s in self.snapshots]
        self.coeffs = [abar(s, gamma, engine) for s in self.snapshots]
        self.gamma = gamma
        self.engine = engine

    @property
    def static(self) -> bool:
        return len(self.snapshots) == 1

    def field_at(self, t: float) -> Field:
        i, lam = self._locate(t)
        if lam == 0.0:
            return self.snapshots[i]
        vals = (1 - lam) * self.snapshots[i].values + lam * self.snapshots[i + 1].values
        return Field(self.snapshots[0].grid, vals, t)

    def at(self, t: float) -> CoefficientField:
        i, lam = self._locate(t)
        if lam == 0.0:
            return self.coeffs[i]
        a = (1 - lam) * self.coeffs[i].abar + lam * self.coeffs[i + 1].abar
        c = (1 - lam) * self.coeffs[i].cbar + lam * self.coeffs[i + 1].cbar
        return CoefficientField(self.coeffs[0].grid, a, c)

    def _locate(self, t: float):
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return 0, 0.0
        if t >= ts[-1]:
            return len(ts) - 1, 0.0
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return i, float((t - ts[i]) / (ts[i + 1] - ts[i]))


def _support_mask(grid: GridSpec, config: SolverConfig) -> np.ndarray | None:
    if not config.dirichlet_outside_support:
        return None
    fam = CutoffFamily(config.R, max_level=1)
    psi1 = fam.on_grid(grid, 1)
    return grid.broadcast_v((psi1 > 0).astype(float))


def _step_f(Fv: np.ndarray, grid: GridSpec, coeffs: CoefficientField,
            config: SolverConfig, dt: float, wsplit: dict | None) -> np.ndarray:
    F = Field(grid, Fv)
    rhs = -_transport(F, config.transport)
    rhs -= coeffs.cbar * Fv
    if config.epsilon:
        rhs += config.epsilon * _laplace(F)
    if config.diffusion == "split":
        rhs += _split_diffusion(Fv, grid, wsplit)
    else:
        rhs += _central_diffusion(F, coeffs.abar)
    out = Fv + dt * rhs
    if config.scheme == "imex":
        out = _implicit_axis_diffusion(out, grid, coeffs, config, dt)
    return out


def _implicit_axis_diffusion(Fv: np.ndarray, grid: GridSpec,
                             coeffs: CoefficientField, config: SolverConfig,
                             dt: float) -> np.ndarray:
    """Backward-Euler sweep of extra axis diffusion headroom for the IMEX
    scheme: one tridiagonal solve per lattice line with the axis-diagonal
    coefficient."""
    from scipy.linalg import solve_banded

    out = Fv
    n = grid.v_count
    h2 = grid.h_v ** 2
    for j in range(3):
        axis = grid.x_axes + j
        lam = coeffs.abar[..., j, j] + config.epsilon
        moved = np.moveaxis(np.broadcast_to(lam, Fv.shape), axis, -1)
        vals = np.moveaxis(out, axis, -1).copy()
        flat = vals.reshape(-1, n)
        lam_flat = moved.reshape(-1, n)
        for row in range(flat.shape[0]):
            r = dt * lam_flat[row] / h2
            ab = np.zeros((3, n))
            ab[0, 1:] = -r[:-1]
            ab[1] = 1.0 + 2.0 * r
            ab[2, :-1] = -r[1:]
            flat[row] = solve_banded((1, 1), ab, flat[row])
        out = np.moveaxis(vals, -1, axis)
    return out


def step(G: Field, lin, config: SolverConfig, t: float,
         dt: float | None = None) -> Field:
    """One step: transform to F, explicit (or IMEX) update, transform back
    with the multiplier at t + dt, which treats the damping exactly."""
    if isinstance(lin, Field) or isinstance(lin, list):
        lin = Linearization(lin, config.params.gamma, config.engine)
    grid = G.grid
    config.validate_against(grid)
    coeffs = lin.at(t)
    limit = stability_dt(config, grid, coeffs)
    if dt is None:
        dt = config.dt if config.dt is not None else limit
    if dt == 0.0:
        return G
    if dt > limit * (1 + 1e-9):
        raise ValueError(f"dt={dt:.3e} violates the stability bound {limit:.3e}")
    F = to_f(G, config.weight, t)
    wsplit = split_weights(coeffs.abar, grid.h_v) if config.diffusion == "split" else None
    Fv = _step_f(F.values, grid, coeffs, config, dt, wsplit)
    mask = _support_mask(grid, config)
    if mask is not None:
        Fv = Fv * mask
    return to_g(Field(grid, Fv, t + dt), config.weight, t + dt)


# --------------------------------------------------------------------------
# Error-term ledger
# --------------------------------------------------------------------------


@dataclass
class TermLedger:
    """Time-integrated magnitudes of every energy-estimate error functional,
    per derivative pair.

    The factors inside each functional are order-level envelopes (pointwise
    maxima over the derivative combinations of the admitted orders), so each
    entry majorizes its class of terms while staying computable at any
    order; all entries are nonnegative by construction.
    """

    entries: dict  # index key -> {term name -> float}
    times: list

    def total(self, term: str) -> float:
        return sum(v[term] for v in self.entries.values())

    def boundary_total(self) -> float:
        return sum(self.total(t) for t in ("B1", "B2", "B3", "B4", "B5"))

    def audit_manifest(self) -> bool:
        """Every functional named by the energy estimate has exactly one slot."""
        return all(
            tuple(sorted(v.keys())) == tuple(sorted(LEDGER_TERMS))
            for v in self.entries.values()
        )

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "entries": {k: dict(sorted(v.items())) for k, v in sorted(self.entries.items())},
            "totals": {t: self.total(t) for t in LEDGER_TERMS},
            "boundary_total": self.boundary_total(),
        }


def _e(j: int) -> tuple[int, int, int]:
    return tuple(1 if k == j else 0 for k in range(3))


def _env_le(env: dict, k: int):
    """Pointwise max over orders 0..k (clamped to what exists)."""
    k = min(k, max(env.keys()))
    out = None
    for kk in range(k + 1):
        if kk in env:
            out = env[kk] if out is None else np.maximum(out, env[kk])
    return out


def _env_range(env: dict, lo: int, hi: int):
    out = None
    for kk in range(lo, min(hi, max(env.keys())) + 1):
        if kk in env:
            out = env[kk] if out is None else np.maximum(out, env[kk])
    return out


def _acc(d: dict, k: int, arr: np.ndarray):
    d[k] = np.maximum(d[k], arr) if k in d else arr


def _g_derivative_envelopes(G: Field, max_order: int) -> dict[int, np.ndarray]:
    env: dict[int, np.ndarray] = {}
    for idx in enumerate_indices(max_order):
        _acc(env, idx.order, np.abs(derivative(G, idx).values))
    return env


class _LedgerEvaluator:
    """Snapshot evaluation of the error-term functionals."""

    def __init__(self, config: SolverConfig, grid: GridSpec, hierarchy: WeightHierarchy):
        self.config = config
        self.grid = grid
        self.hierarchy = hierarchy
        self.family = CutoffFamily(config.R, max_level=min(max(hierarchy.max_order, 1), 10))
        self.bracket = grid.bracket()
        self._psi_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def psi(self, m: int) -> np.ndarray:
        return self.family.on_grid(self.grid, min(m, self.family.max_level))

    def _v_grid(self) -> GridSpec:
        g = self.grid
        if g.x_axes == 0:
            return g
        return GridSpec(v_count=g.v_count, v_extent=g.v_extent, x_axes=0,
                        stencil_order=g.stencil_order)

    def psi_derivs(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Analytic per-cell envelopes of |grad psi_m| and |hess psi_m| (the
        ramp is sub-grid at desk scale, so differencing the sampled cutoff
        would alias)."""
        m = min(m, self.family.max_level)
        if m not in self._psi_cache:
            self._psi_cache[m] = (
                self.family.gradient_envelope_on_grid(self.grid, m),
                self.family.hessian_envelope_on_grid(self.grid, m),
            )
        return self._psi_cache[m]

    def _l1(self, integrand: np.ndarray) -> float:
        g = self.grid
        return float(np.abs(integrand).sum() * g.v_cell_volume * g.x_cell_measure)

    def coefficient_envelopes(self, lin: Linearization, t: float, max_order: int) -> dict:
        """Pointwise envelopes of coefficient-derivative magnitudes by order:
        kernel derivatives ride analytically (up to second), remaining
        derivatives move onto the input or act on the assembled product."""
        h_field = lin.field_at(t)
        gamma, engine = lin.gamma, lin.engine
        g = self.grid
        bracket = g.broadcast_v(self.bracket)
        v1, v2, v3 = g.v_mesh()
        vfac = g.broadcast_v(np.stack([v1, v2, v3], axis=-1) / self.bracket[..., None])
        vsq = g.broadcast_v((v1 * v1 + v2 * v2 + v3 * v3) / self.bracket ** 2)
        eps = self.config.epsilon
        env: dict[str, dict[int, np.ndarray]] = {
            "a": {}, "da": {}, "d2a": {}, "c": {}, "a_v": {}, "a_trace": {}, "a_vv": {},
        }
        for idx in enumerate_indices(max_order):
            k = idx.order
            a_t = abar_derived(h_field, idx, 0, "plain", gamma, engine)
            _acc(env["a"], k, np.abs(a_t).max(axis=(-2, -1)))
            da_t = abar_derived(h_field, idx, 1, "plain", gamma, engine)
            _acc(env["da"], k, np.abs(da_t).max(axis=(-3, -2, -1)))
            d2a_t = abar_derived(h_field, idx, 2, "plain", gamma, engine)
            _acc(env["d2a"], k, np.abs(d2a_t).max(axis=(-4, -3, -2, -1)))
            _acc(env["c"], k, np.abs(cbar(derivative(h_field, idx), gamma, engine)))
            # velocity-factor products; x-derivatives on the input, the
            # v-derivatives act on the assembled product
            dx = derivative(h_field, MultiIndex(idx.alpha, (0, 0, 0)))
            vb = MultiIndex(beta=idx.beta)
            prod_v = abar_derived(dx, ZERO_INDEX, 0, "v_over_bracket", gamma, engine)
            prod_v = prod_v + eps * vfac
            comps = [np.abs(derivative(Field(g, prod_v[..., j]), vb).values) for j in range(3)]
            _acc(env["a_v"], k, np.max(comps, axis=0))
            prod_tr = abar_derived(dx, ZERO_INDEX, 0, "trace_over_bracket", gamma, engine)
            prod_tr = prod_tr + eps / bracket
            _acc(env["a_trace"], k, np.abs(derivative(Field(g, prod_tr), vb).values))
            prod_vv = abar_derived(dx, ZERO_INDEX, 0, "vv_over_bracket2", gamma, engine)
            prod_vv = prod_vv + eps * vsq
            _acc(env["a_vv"], k, np.abs(derivative(Field(g, prod_vv), vb).values))
        return env

    def evaluate(self, G: Field, g_env: dict, coef_env: dict, kappa: float) -> dict:
        """All ledger functionals at one snapshot, keyed by derivative pair."""
        g = self.grid
        bracket = g.broadcast_v(self.bracket)
        eps = self.config.epsilon
        out = {}
        a0 = coef_env["a"][0]
        a0_eps = a0 + eps
        cenv1 = coef_env["da"][0]
        if 1 in coef_env["a"]:
            cenv1 = np.maximum(cenv1, coef_env["a"][1])
        for idx in enumerate_indices(self.config.max_derivative_order):
            m = idx.order
            w = self.hierarchy.weight(idx)
            w2 = bracket ** (2 * w)
            psi_m = g.broadcast_v(self.psi(m))
            dG = np.abs(derivative(G, idx).values)
            base2 = w2 * psi_m ** 2 * dG ** 2
            terms = {
                "A1": self._l1(w2 * psi_m ** 2 * coef_env["d2a"][0] * dG ** 2),
                "A2": self._l1(base2 * a0 / bracket ** 2),
                "A3": self._l1(base2 * coef_env["da"][0] / bracket),
            }
            if m == 0:
                terms.update({k: 0.0 for k in ("B1", "B2", "B3", "B4", "B5")})
            else:
                # the companion cutoff value is bounded by one on the ramp,
                # where the derivative envelopes localize
                grad_psi, hess_psi = self.psi_derivs(m)
                grad_psi = g.broadcast_v(grad_psi)
                hess_psi = g.broadcast_v(hess_psi)
                terms["B1"] = self._l1(w2 * hess_psi * a0_eps * dG ** 2)
                terms["B2"] = self._l1(w2 * grad_psi ** 2 * a0_eps * dG ** 2)
                terms["B3"] = self._l1(w2 * grad_psi * a0_eps * dG ** 2 / bracket)
                terms["B4"] = self._l1(w2 * grad_psi * g_env[m] * cenv1 * g_env[m])
                terms["B5"] = self._l1(w2 * grad_psi * coef_env["a_v"][0] * dG ** 2)
            has_v = idx.v_order >= 1
            commut = _env_le(g_env, m)
            terms["T1"] = self._l1(w2 * psi_m ** 2 * dG * commut) if has_v else 0.0
            terms["T2"] = kappa * terms["T1"]
            t31 = 0.0
            hi = min(m, 8)
            if hi >= 2:
                cenv = _env_range(coef_env["a"], 2, hi)
                if cenv is not None:
                    t31 = self._l1(w2 * psi_m ** 2 * g_env[m] * cenv * _env_le(g_env, m + 2))
            terms["T3_1"] = t31
            t32 = 0.0
            if m >= 9:
                cenv = _env_range(coef_env["a"], 9, m)
                if cenv is not None:
                    t32 = self._l1(w2 * psi_m ** 2 * dG * cenv * _env_le(g_env, m - 7))
            terms["T3_2"] = t32
            terms["T3_3"] = (
                self._l1(w2 * psi_m ** 2 * dG * cenv1 * _env_le(g_env, m + 1) / bracket)
                if m >= 1 else 0.0
            )
            terms["T4"] = self._l1(
                w2 * psi_m ** 2 * dG * _env_le(coef_env["c"], m) * _env_le(g_env, m)
            )
            t51 = 0.0
            if m >= 1:
                cenv = _env_range(coef_env["a_v"], 1, m)
                if cenv is not None:
                    t51 = self._l1(w2 * psi_m ** 2 * dG * cenv * _env_le(g_env, m))
            terms["T5_1"] = t51
            terms["T5_2"] = self._l1(base2 * coef_env["a_v"][0] / bracket)
            t61 = 0.0
            if m >= 1:
                cenv = _env_range(coef_env["a_trace"], 1, m)
                if cenv is not None:
                    t61 = self._l1(w2 * psi_m ** 2 * dG * cenv * _env_le(g_env, m - 1))
            terms["T6_1"] = t61
            terms["T6_2"] = self._l1(
                w2 * psi_m ** 2 * dG * _env_le(coef_env["a_vv"], m) * _env_le(g_env, m)
            )
            out[idx.key()] = terms
        return out


@dataclass
class SolveResult:
    trajectory: list
    energy: EnergyReport
    ledger: TermLedger
    gronwall: dict
    min_f_ratio: float
    config: SolverConfig
    dt: float

    def final(self) -> Field:
        return self.trajectory[-1]


def solve_linearized(
    g_ini: Field,
    h,
    config: SolverConfig,
    T: float,
    n_snapshots: int = 9,
    hierarchy: WeightHierarchy | None = None,
    evaluate_ledger: bool = True,
) -> SolveResult:
    """Integrate the linearized problem to time T.

    ``h`` is the (nonnegative) linearization input: a static Field or a list
    of snapshot Fields.  Returns the snapshot trajectory, the energy report
    over derivative pairs up to config.max_derivative_order, the error-term
    ledger, the fitted exponential rate of the Y-norm, and the worst
    signed-minimum ratio of the F-representation (the maximum-principle
    monitor).  Aborts when growth outruns every admissible exponential
    bound.
    """
    if T < 0 or T > config.weight.T0 * (1 + 1e-12):
        raise ValueError(f"T={T} outside [0, T0={config.weight.T0}]")
    grid = g_ini.grid
    config.validate_against(grid)
    hierarchy = hierarchy or WeightHierarchy.main(config.params)
    lin = h if isinstance(h, Linearization) else Linearization(
        h, config.params.gamma, config.engine
    )

    dt = config.dt if config.dt is not None else stability_dt(config, grid, lin.at(0.0))
    n_steps = max(1, int(np.ceil(T / dt - 1e-12))) if T > 0 else 0
    if n_steps:
        # uniform snapshot cadence: step count a multiple of the intervals
        intervals = min(max(n_snapshots - 1, 1), n_steps)
        n_steps = int(np.ceil(n_steps / intervals)) * intervals
        snap_every = n_steps // intervals
        dt = T / n_steps
    else:
        snap_every = 1

    mask = _support_mask(grid, config)
    G = g_ini if mask is None else Field(grid, g_ini.values * mask, g_ini.time)
    trajectory = [Field(grid, G.values.copy(), 0.0)]
    min_f_ratio = 0.0
    y0 = max(l2_norm(trajectory[0]), 1e-300)

    refresh_every = max(1, n_steps // max(len(lin.snapshots) * 4, 8)) if not lin.static else n_steps + 1
    coeffs = lin.at(0.0)
    wsplit = split_weights(coeffs.abar, grid.h_v) if config.diffusion == "split" else None
    t = 0.0
    for k in range(n_steps):
        if not lin.static and k and k % refresh_every == 0:
            coeffs = lin.at(t)
            if config.diffusion == "split":
                wsplit = split_weights(coeffs.abar, grid.h_v)
        F = to_f(G, config.weight, t)
        Fv = _step_f(F.values, grid, coeffs, config, dt, wsplit)
        if mask is not None:
            Fv = Fv * mask
        fmax = float(np.abs(Fv).max())
        if fmax > 0:
            min_f_ratio = min(min_f_ratio, float(Fv.min()) / fmax)
        t += dt
        G = to_g(Field(grid, Fv, t), config.weight, t)
        if not np.all(np.isfinite(G.values)):
            raise SolverInstability(f"non-finite state at t={t:.4g}")
        if (k + 1) % snap_every == 0 or k + 1 == n_steps:
            trajectory.append(Field(grid, G.values.copy(), t))
            ycur = l2_norm(trajectory[-1])
            if ycur > y0 * np.exp(config.instability_cap * t) and ycur > 1e-12:
                raise SolverInstability(
                    f"Y-norm growth at t={t:.4g} exceeds exp({config.instability_cap} t)"
                )

    energy = energy_report(trajectory, hierarchy, config.max_derivative_order)

    ledger = TermLedger(entries={}, times=[f.time for f in trajectory])
    if evaluate_ledger:
        ev = _LedgerEvaluator(config, grid, hierarchy)
        coef_env = None
        per_time = []
        for f_snap in trajectory:
            g_env = _g_derivative_envelopes(f_snap, config.max_derivative_order + 2)
            if coef_env is None or not lin.static:
                coef_env = ev.coefficient_envelopes(
                    lin, f_snap.time, config.max_derivative_order
                )
            per_time.append(ev.evaluate(f_snap, g_env, coef_env, config.weight.kappa))
        times = np.asarray([f.time for f in trajectory])
        entries = {}
        for key in per_time[0]:
            entries[key] = {
                term: trapezoid_time(
                    np.asarray([pt[key][term] for pt in per_time]), times
                )
                for term in LEDGER_TERMS
            }
        ledger = TermLedger(entries=entries, times=list(times))

    gronwall = _fit_gronwall(energy)
    return SolveResult(trajectory, energy, ledger, gronwall, min_f_ratio, config, dt)


def _fit_gronwall(energy: EnergyReport) -> dict:
    """Least-squares exponential rate of the total Y-norm and whether
    Y(t) <= Y(0) exp(C_fit t) holds along the run (5% headroom)."""
    times = np.asarray(energy.times)
    y = np.asarray(energy.y_total)
    live = y > 1e-300
    if live.sum() < 2:
        return {"C": 0.0, "bound_holds": True, "margin": 0.0}
    A = np.vstack([times[live], np.ones(int(live.sum()))]).T
    slope, _ = np.linalg.lstsq(A, np.log(y[live]), rcond=None)[0]
    c_fit = float(slope)
    bound = y[0] * np.exp(c_fit * times)
    margin = float((y / np.maximum(bound, 1e-300)).max())
    return {"C": c_fit, "bound_holds": bool(margin <= 1.05), "margin": margin}


def boundary_decay_audit(results: list[tuple[float, SolveResult]]) -> dict:
    """Fit the decay of the boundary-ledger totals against the cutoff radius.

    Reports the raw-total slope and the slope normalized by the bulk
    dissipation integral; needs runs at two or more radii.
    """
    if len(results) < 2:
        raise ValueError("boundary decay audit needs at least two radii")
    rows = []
    for R, res in sorted(results, key=lambda p: p[0]):
        b_tot = res.ledger.boundary_total()
        x_int = max(res.energy.x_time_integral ** 2, 1e-300)
        rows.append((R, max(b_tot, 1e-300), max(b_tot, 1e-300) / x_int))
    Rs = np.asarray([r[0] for r in rows])
    raw = np.asarray([r[1] for r in rows])
    norm = np.asarray([r[2] for r in rows])

    def _slope(vals):
        A = np.vstack([np.log(Rs), np.ones_like(Rs)]).T
        s, _ = np.linalg.lstsq(A, np.log(vals), rcond=None)[0]
        return float(s)

    return {
        "radii": [float(r) for r in Rs],
        "raw_totals": [float(v) for v in raw],
        "normalized_totals": [float(v) for v in norm],
        "raw_exponent": _slope(raw),
        "normalized_exponent": _slope(norm),
    }
