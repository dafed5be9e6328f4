"""Velocity-weight hierarchies and the combinatorial split-inequality audit.

The energy hierarchy attaches to each derivative pair (alpha, beta) a
velocity-weight exponent

    omega(alpha, beta) = base - (3/2 + delta) |alpha| - (1/2 + delta) |beta|,

with base 20 for the main hierarchy (orders up to 10) and base 10 for the
weaker contraction hierarchy (orders up to 4).  The perturbation delta is 0
for gamma in [0,1) and a small positive eta at gamma = 1.

Every error-term estimate in the energy ledger rests on an inequality
between omega values of the derivative splits admitted by that term.  Those
constraint sets and claims are encoded below as data and verified by
exhaustive enumeration.  Because omega depends on a multi-index only through
the totals (|alpha|, |beta|), enumerating order classes is exhaustive over
componentwise splits; the report records how many concrete multi-indices
each run represents.

All audit arithmetic is exact: weights are scaled to integers by twice the
denominator of delta, so no floating-point comparison ever decides an
inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .multiindex import MultiIndex

__all__ = [
    "ModelParams",
    "WeightHierarchy",
    "AuditReport",
    "check_split_inequalities",
    "SPLIT_PROPOSITIONS",
]


def _as_fraction(x) -> Fraction:
    # str() round-trips decimal literals (0.1 -> 1/10) instead of binary floats
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class ModelParams:
    """Interaction exponent gamma plus the hierarchy perturbation.

    ``eta`` only takes effect at gamma = 1; for gamma < 1 the perturbation
    ``delta`` is identically zero.
    """

    gamma: float
    eta: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    @property
    def delta(self) -> Fraction:
        if self.gamma == 1.0:
            return _as_fraction(self.eta)
        return Fraction(0)

    @property
    def delta_float(self) -> float:
        return float(self.delta)


@dataclass(frozen=True)
class WeightHierarchy:
    params: ModelParams
    base: int = 20
    max_order: int = 10

    @classmethod
    def main(cls, params: ModelParams) -> "WeightHierarchy":
        return cls(params, base=20, max_order=10)

    @classmethod
    def contraction(cls, params: ModelParams) -> "WeightHierarchy":
        """The weaker hierarchy used for the fixed-point contraction norm."""
        return cls(params, base=10, max_order=4)

    def weight_exact(self, x_order: int, v_order: int) -> Fraction:
        if x_order < 0 or v_order < 0:
            raise ValueError("derivative orders must be nonnegative")
        if x_order + v_order > self.max_order:
            raise ValueError(
                f"derivative order {x_order + v_order} exceeds hierarchy max {self.max_order}"
            )
        d = self.params.delta
        return self.base - (Fraction(3, 2) + d) * x_order - (Fraction(1, 2) + d) * v_order

    def weight(self, m: MultiIndex) -> float:
        return float(self.weight_exact(m.x_order, m.v_order))


# --------------------------------------------------------------------------
# Split-inequality audit
# --------------------------------------------------------------------------
#
# Variables: 'a', 'b' are |alpha|, |beta| of the base index; 'a1','b1' the
# derivative orders landing on the convolved coefficient; 'a2','b2' and
# 'a3','b3' the orders on the remaining solution factors.  Each proposition
# is a constraint region over these order variables plus one claim per case.


@dataclass(frozen=True)
class Affine:
    """Integer-affine form  const + sum(coeff * var)  over order variables."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    def eval(self, env) -> int | np.ndarray:
        out = self.const
        for name, c in self.coeffs:
            out = out + c * env[name]
        return out


def _aff(const=0, **coeffs) -> Affine:
    return Affine(tuple(sorted(coeffs.items())), const)


@dataclass(frozen=True)
class Constraint:
    lhs: Affine
    rel: str  # '<=', '==', '>='
    rhs: Affine

    def mask(self, env):
        l, r = self.lhs.eval(env), self.rhs.eval(env)
        if self.rel == "<=":
            return l <= r
        if self.rel == ">=":
            return l >= r
        if self.rel == "==":
            return l == r
        raise ValueError(self.rel)


@dataclass(frozen=True)
class Claim:
    """sum of omega over ``parts``  REL  k*omega(a,b) + const + delta_coeff*delta."""

    parts: tuple[tuple[str, str], ...]  # (x-order var, v-order var) pairs
    rel: str  # '>=', '==', '<='
    base_mult: int = 1
    const: int = 0
    delta_coeff: int = 0


@dataclass(frozen=True)
class Case:
    name: str
    guards: tuple[Constraint, ...]
    claim: Claim


@dataclass(frozen=True)
class SplitProposition:
    name: str
    # scalar-looped variables: (name, inclusive upper bounds, min taken)
    loop_vars: tuple[tuple[str, tuple[Affine, ...]], ...] = ()
    # meshgridded variables, bounds may depend on a, b and loop vars
    grid_vars: tuple[tuple[str, tuple[Affine, ...]], ...] = ()
    # derived variables (affine in everything bound so far); must come out >= 0
    derived: tuple[tuple[str, Affine], ...] = ()
    constraints: tuple[Constraint, ...] = ()
    cases: tuple[Case, ...] = ()


def _c(lhs: Affine, rel: str, rhs: Affine) -> Constraint:
    return Constraint(lhs, rel, rhs)


_GE2 = _c(_aff(a1=1, b1=1), ">=", _aff(2))

SPLIT_PROPOSITIONS: tuple[SplitProposition, ...] = (
    # Commutator of transport with the derivative: one beta trades for one alpha.
    SplitProposition(
        name="T1",
        grid_vars=(("a1", (_aff(1, a=1),)), ("b1", (_aff(-1, b=1),))),
        cases=(
            Case(
                "all",
                (),
                Claim(parts=(("a1", "b1"),), rel=">=", base_mult=1, const=-1),
            ),
        ),
    ),
    # Damping-weight commutator: only velocity derivatives drop.
    SplitProposition(
        name="T2",
        grid_vars=(("b1", (_aff(-1, b=1),)),),
        derived=(("a1", _aff(a=1)),),
        cases=(Case("all", (), Claim(parts=(("a1", "b1"),), rel=">=")),),
    ),
    # Diffusion term, at most 8 derivatives on the coefficient.
    SplitProposition(
        name="T3_1",
        loop_vars=(("a3", (_aff(a=2), _aff(a=1, b=1))),),
        derived=(("b3", _aff(a=1, b=1, a3=-1)),),
        grid_vars=(
            ("a2", (_aff(a=2), _aff(a=1, b=1))),
            ("b2", (_aff(2, b=2), _aff(a=1, b=1))),
            ("a1", (_aff(8), _aff(a=2))),
            ("b1", (_aff(8), _aff(2, b=2))),
        ),
        constraints=(
            _c(_aff(a1=1, a2=1, a3=1), "<=", _aff(a=2)),
            _c(_aff(b1=1, b2=1, b3=1), "<=", _aff(2, b=2)),
            _c(_aff(a2=1, b2=1), "<=", _aff(a=1, b=1)),
            _GE2,
            _c(_aff(a1=1, b1=1), "<=", _aff(a=1, b=1)),
            _c(_aff(a1=1, b1=1), "<=", _aff(8)),
        ),
        cases=(
            Case(
                "case1_bprime_ge_2",
                (_c(_aff(b1=1), ">=", _aff(2)),),
                Claim(parts=(("a2", "b2"), ("a3", "b3")), rel=">=", base_mult=2),
            ),
            Case(
                "case2_bprime_eq_1",
                (_c(_aff(b1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2"), ("a3", "b3")), rel=">=", base_mult=2, const=1),
            ),
            Case(
                "case3_bprime_eq_0",
                (_c(_aff(b1=1), "==", _aff(0)),),
                Claim(parts=(("a2", "b2"), ("a3", "b3")), rel=">=", base_mult=2, const=2),
            ),
        ),
    ),
    # Diffusion term, 9+ derivatives on the coefficient; the second factor
    # carries two extra velocity derivatives from the embedding step.
    SplitProposition(
        name="T3_2",
        grid_vars=(("a1", (_aff(a=1),)), ("b1", (_aff(b=1),))),
        derived=(("a2", _aff(a=1, a1=-1)), ("b2p", _aff(2, b=1, b1=-1))),
        constraints=(_c(_aff(a1=1, b1=1), ">=", _aff(9)),),
        cases=(
            Case(
                "case1_bprime_ge_2",
                (_c(_aff(b1=1), ">=", _aff(2)),),
                Claim(parts=(("a2", "b2p"),), rel=">=", const=3, delta_coeff=2),
            ),
            Case(
                "case2_bprime_eq_1",
                (_c(_aff(b1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2p"),), rel=">=", const=4, delta_coeff=2),
            ),
            Case(
                "case3_bprime_eq_0",
                (_c(_aff(b1=1), "==", _aff(0)),),
                Claim(parts=(("a2", "b2p"),), rel=">=", const=5, delta_coeff=2),
            ),
        ),
    ),
    # Diffusion term with exactly one derivative on the coefficient; after
    # integration by parts the partner picks up one velocity derivative and
    # the weight relation is an exact identity.
    SplitProposition(
        name="T3_3",
        grid_vars=(("a1", (_aff(a=1),)), ("b1", (_aff(b=1),))),
        derived=(("a2", _aff(a=1, a1=-1)), ("b2p", _aff(1, b=1, b1=-1))),
        constraints=(_c(_aff(a1=1, b1=1), "==", _aff(1)),),
        cases=(
            Case(
                "case1_bprime_eq_1",
                (_c(_aff(b1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2p"),), rel="=="),
            ),
            Case(
                "case2_aprime_eq_1",
                (_c(_aff(a1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2p"),), rel="==", const=1),
            ),
        ),
    ),
    # Reaction term: plain Leibniz split, fewer derivatives means more weight.
    SplitProposition(
        name="T4",
        grid_vars=(
            ("a1", (_aff(a=1),)),
            ("b1", (_aff(b=1),)),
            ("a2", (_aff(a=1),)),
            ("b2", (_aff(b=1),)),
        ),
        constraints=(
            _c(_aff(a1=1, a2=1), "<=", _aff(a=1)),
            _c(_aff(b1=1, b2=1), "<=", _aff(b=1)),
        ),
        cases=(Case("all", (), Claim(parts=(("a2", "b2"),), rel=">=")),),
    ),
    # First-order drift term; the split grows |beta| by one.
    SplitProposition(
        name="T5_1",
        grid_vars=(("a1", (_aff(a=1),)), ("b1", (_aff(1, b=1),))),
        derived=(("a2", _aff(a=1, a1=-1)), ("b2", _aff(1, b=1, b1=-1))),
        constraints=(
            _c(_aff(a1=1, b1=1), ">=", _aff(1)),
            _c(_aff(a1=1, b1=1), "<=", _aff(a=1, b=1)),
        ),
        cases=(
            Case(
                "case1a_le8_bprime_ge_1",
                (_c(_aff(a1=1, b1=1), "<=", _aff(8)), _c(_aff(b1=1), ">=", _aff(1))),
                Claim(parts=(("a2", "b2"),), rel=">="),
            ),
            Case(
                "case1b_le8_bprime_eq_0",
                (_c(_aff(a1=1, b1=1), "<=", _aff(8)), _c(_aff(b1=1), "==", _aff(0))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=1),
            ),
            Case(
                "case2a_ge9_bprime_ge_1",
                (_c(_aff(a1=1, b1=1), ">=", _aff(9)), _c(_aff(b1=1), ">=", _aff(1))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=3, delta_coeff=2),
            ),
            Case(
                "case2b_ge9_bprime_eq_0",
                (_c(_aff(a1=1, b1=1), ">=", _aff(9)), _c(_aff(b1=1), "==", _aff(0))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=4, delta_coeff=2),
            ),
        ),
    ),
    # Drift term with no derivatives on the coefficient: weight identity.
    SplitProposition(
        name="T5_2",
        derived=(("a1", _aff(a=1)), ("b1", _aff(b=1))),
        cases=(Case("identity", (), Claim(parts=(("a1", "b1"),), rel=">=")),),
    ),
    # Zeroth-order trace term, at least one derivative on the coefficient.
    SplitProposition(
        name="T6_1",
        grid_vars=(
            ("a1", (_aff(a=1),)),
            ("b1", (_aff(b=1),)),
            ("a2", (_aff(a=1),)),
            ("b2", (_aff(b=1),)),
        ),
        constraints=(
            _c(_aff(a1=1, a2=1), "<=", _aff(a=1)),
            _c(_aff(b1=1, b2=1), "<=", _aff(b=1)),
            _c(_aff(a1=1, b1=1), ">=", _aff(1)),
        ),
        cases=(
            Case(
                "case1a_le8_bprime_ge_1",
                (_c(_aff(a1=1, b1=1), "<=", _aff(8)), _c(_aff(b1=1), ">=", _aff(1))),
                Claim(parts=(("a2", "b2"),), rel=">="),
            ),
            Case(
                "case1b_le8_bprime_eq_0",
                (_c(_aff(a1=1, b1=1), "<=", _aff(8)), _c(_aff(b1=1), "==", _aff(0))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=1),
            ),
            Case(
                "case2a_ge9_bprime_ge_1",
                (_c(_aff(a1=1, b1=1), ">=", _aff(9)), _c(_aff(b1=1), ">=", _aff(1))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=3, delta_coeff=2),
            ),
            Case(
                "case2b_ge9_bprime_eq_0",
                (_c(_aff(a1=1, b1=1), ">=", _aff(9)), _c(_aff(b1=1), "==", _aff(0))),
                Claim(parts=(("a2", "b2"),), rel=">=", const=4, delta_coeff=2),
            ),
        ),
    ),
    # Zeroth-order anisotropic term: any Leibniz split.
    SplitProposition(
        name="T6_2",
        grid_vars=(
            ("a1", (_aff(a=1),)),
            ("b1", (_aff(b=1),)),
            ("a2", (_aff(a=1),)),
            ("b2", (_aff(b=1),)),
        ),
        constraints=(
            _c(_aff(a1=1, a2=1), "<=", _aff(a=1)),
            _c(_aff(b1=1, b2=1), "<=", _aff(b=1)),
        ),
        cases=(
            Case(
                "case1_le8",
                (_c(_aff(a1=1, b1=1), "<=", _aff(8)),),
                Claim(parts=(("a2", "b2"),), rel=">="),
            ),
            Case(
                "case2_ge9",
                (_c(_aff(a1=1, b1=1), ">=", _aff(9)),),
                Claim(parts=(("a2", "b2"),), rel=">=", const=3, delta_coeff=2),
            ),
        ),
    ),
    # Highest-order bulk term with two weights traded for the coefficient.
    SplitProposition(
        name="A2",
        derived=(("a1", _aff(a=1)), ("b1", _aff(b=1))),
        cases=(Case("identity", (), Claim(parts=(("a1", "b1"),), rel=">=")),),
    ),
    # Boundary term with one derivative on the coefficient and one on the
    # cutoff; the order bookkeeping forces exact weight identities.
    SplitProposition(
        name="B4",
        grid_vars=(
            ("a1", (_aff(1),)),
            ("b1", (_aff(1),)),
            ("a2", (_aff(a=2), _aff(a=1, b=1))),
        ),
        derived=(
            ("b2", _aff(a=1, b=1, a2=-1)),
            ("a3", _aff(a=2, a1=-1, a2=-1)),
            ("b3", _aff(1, b=2, b1=-1, b2=-1)),
        ),
        constraints=(_c(_aff(a1=1, b1=1), "==", _aff(1)),),
        cases=(
            Case(
                "case1_bprime_eq_1",
                (_c(_aff(b1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2"), ("a3", "b3")), rel="==", base_mult=2),
            ),
            Case(
                "case2_aprime_eq_1",
                (_c(_aff(a1=1), "==", _aff(1)),),
                Claim(parts=(("a2", "b2"), ("a3", "b3")), rel="==", base_mult=2, const=1),
            ),
        ),
    ),
    # One extra derivative from the viscosity term is absorbed by a full
    # weight: 2*omega' + 1 + 2*delta never exceeds 2*omega.
    SplitProposition(
        name="viscous_absorb",
        cases=(
            Case(
                "x_derivative",
                (),
                Claim(
                    parts=(("_ap1", "b"),),
                    rel="<=",
                    base_mult=2,
                    const=-1,
                    delta_coeff=-2,
                ),
            ),
            Case(
                "v_derivative",
                (),
                Claim(
                    parts=(("a", "_bp1"),),
                    rel="<=",
                    base_mult=2,
                    const=-1,
                    delta_coeff=-2,
                ),
            ),
        ),
        derived=(("_ap1", _aff(1, a=1)), ("_bp1", _aff(1, b=1))),
    ),
)

# viscous_absorb compares 2*omega' against 2*omega - 1 - 2*delta, so its
# claim doubles the single part:
_VISC = SPLIT_PROPOSITIONS[-1]
_VISC_CASES = tuple(
    Case(c.name, c.guards, Claim(parts=c.claim.parts * 2, rel=c.claim.rel,
                                 base_mult=c.claim.base_mult, const=c.claim.const,
                                 delta_coeff=c.claim.delta_coeff))
    for c in _VISC.cases
)
SPLIT_PROPOSITIONS = SPLIT_PROPOSITIONS[:-1] + (
    SplitProposition(
        name=_VISC.name,
        derived=_VISC.derived,
        cases=_VISC_CASES,
    ),
)


@dataclass
class CaseResult:
    cases_checked: int = 0
    violation_count: int = 0
    violations: list = field(default_factory=list)  # sample of offending envs
    min_slack: Fraction | None = None  # tightest margin seen (>= props)
    max_abs_residual: Fraction | None = None  # for equality claims

    def to_dict(self) -> dict:
        return {
            "cases_checked": self.cases_checked,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "min_slack": None if self.min_slack is None else str(self.min_slack),
            "max_abs_residual": (
                None if self.max_abs_residual is None else str(self.max_abs_residual)
            ),
        }


@dataclass
class AuditReport:
    gamma: float
    eta: float
    delta: Fraction
    max_order: int
    results: dict  # "prop/case" -> CaseResult
    indices_represented: int
    total_cases: int
    total_violations: int

    @property
    def passed(self) -> bool:
        return self.total_violations == 0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "eta": self.eta,
            "delta": str(self.delta),
            "max_order": self.max_order,
            "indices_represented": self.indices_represented,
            "total_cases": self.total_cases,
            "total_violations": self.total_violations,
            "passed": self.passed,
            "results": {k: v.to_dict() for k, v in sorted(self.results.items())},
        }


def _min_bound(bounds: tuple[Affine, ...], env) -> int:
    return min(int(b.eval(env)) for b in bounds)


def _scaled_weight(base: int, num3: int, num1: int, a, b):
    # scaled omega: S*base - num3*a - num1*b with S = 2*den(delta)
    return -num3 * a - num1 * b


def check_split_inequalities(
    h: WeightHierarchy, violation_limit: int = 20
) -> AuditReport:
    """Exhaustively verify every ledger weight inequality at order <= max_order.

    Returns a report with per-proposition-case counts, the minimum slack
    observed (in weight units), and a list of violations (expected empty).
    """
    delta = h.params.delta
    q, p = delta.denominator, delta.numerator
    scale = 2 * q
    w_base = scale * h.base  # scaled omega(0,0)
    n3 = 3 * q + 2 * p  # scaled (3/2 + delta)
    n1 = q + 2 * p  # scaled (1/2 + delta)

    def scaled_omega(a_val, b_val):
        return w_base - n3 * a_val - n1 * b_val

    results: dict[str, CaseResult] = {
        f"{prop.name}/{case.name}": CaseResult()
        for prop in SPLIT_PROPOSITIONS
        for case in prop.cases
    }

    base_pairs = [
        (a, b) for a in range(h.max_order + 1) for b in range(h.max_order + 1 - a)
    ]

    for prop in SPLIT_PROPOSITIONS:
        for a, b in base_pairs:
            base_env = {"a": a, "b": b}
            for loop_env in _loop_assignments(prop.loop_vars, base_env):
                env = dict(base_env, **loop_env)
                grids = {}
                shape = []
                ok = True
                for name, bounds in prop.grid_vars:
                    ub = _min_bound(bounds, env)
                    if ub < 0:
                        ok = False
                        break
                    grids[name] = np.arange(ub + 1, dtype=np.int64)
                    shape.append(ub + 1)
                if not ok:
                    continue
                if grids:
                    mesh = np.meshgrid(*grids.values(), indexing="ij", sparse=True)
                    env.update(dict(zip(grids.keys(), mesh)))
                mask = np.ones(tuple(shape) if shape else (), dtype=bool)
                for name, form in prop.derived:
                    val = form.eval(env)
                    env[name] = val
                    mask = mask & (val >= 0)
                for con in prop.constraints:
                    mask = mask & con.mask(env)
                for case in prop.cases:
                    cmask = mask
                    for g in case.guards:
                        cmask = cmask & g.mask(env)
                    count = int(np.count_nonzero(cmask))
                    if count == 0:
                        continue
                    res = results[f"{prop.name}/{case.name}"]
                    res.cases_checked += count
                    claim = case.claim
                    lhs = 0
                    for ax, bx in claim.parts:
                        lhs = lhs + scaled_omega(env[ax], env[bx])
                    rhs = (
                        claim.base_mult * scaled_omega(a, b)
                        + scale * claim.const
                        + 2 * p * claim.delta_coeff
                    )
                    diff = np.broadcast_to(np.asarray(lhs - rhs), cmask.shape if shape else ())
                    sel = diff[cmask] if shape else np.asarray([diff]) if cmask else np.asarray([], dtype=np.int64)
                    if sel.size == 0:
                        continue
                    if claim.rel == ">=":
                        slack = sel
                    elif claim.rel == "<=":
                        slack = -sel
                    else:  # '=='
                        resid = Fraction(int(np.abs(sel).max()), scale)
                        if res.max_abs_residual is None or resid > res.max_abs_residual:
                            res.max_abs_residual = resid
                        slack = -np.abs(sel)
                        bad = slack < 0
                        res.violation_count += int(np.count_nonzero(bad))
                        _record_violations(res, prop, case, env, cmask, slack, shape, scale, violation_limit)
                        continue
                    mslack = Fraction(int(slack.min()), scale)
                    if res.min_slack is None or mslack < res.min_slack:
                        res.min_slack = mslack
                    bad = slack < 0
                    res.violation_count += int(np.count_nonzero(bad))
                    _record_violations(res, prop, case, env, cmask, slack, shape, scale, violation_limit)

    indices = _componentwise_count(h.max_order)
    total_cases = sum(r.cases_checked for r in results.values())
    total_violations = sum(r.violation_count for r in results.values())
    return AuditReport(
        gamma=h.params.gamma,
        eta=h.params.eta,
        delta=delta,
        max_order=h.max_order,
        results=results,
        indices_represented=indices,
        total_cases=total_cases,
        total_violations=total_violations,
    )


def _loop_assignments(loop_vars, base_env):
    if not loop_vars:
        yield {}
        return
    (name, bounds), rest = loop_vars[0], loop_vars[1:]
    ub = _min_bound(bounds, base_env)
    for val in range(max(ub, -1) + 1):
        env = dict(base_env)
        env[name] = val
        for sub in _loop_assignments(rest, env):
            out = {name: val}
            out.update(sub)
            yield out


def _record_violations(res, prop, case, env, cmask, slack, shape, scale, limit):
    bad = slack < 0
    if not np.any(bad):
        return
    if len(res.violations) >= limit:
        return
    full_bad = np.zeros(cmask.shape if shape else (), dtype=bool)
    if shape:
        full_bad[cmask] = bad
        idxs = np.argwhere(full_bad)
        for idx in idxs[: limit - len(res.violations)]:
            entry = {"a": env["a"], "b": env["b"]}
            for (name, _), k in zip(prop.grid_vars, idx):
                entry[name] = int(k)
            res.violations.append(entry)
    else:
        res.violations.append({"a": env["a"], "b": env["b"]})


def _componentwise_count(max_order: int) -> int:
    """Number of componentwise (alpha, beta) pairs with total order <= max_order."""
    import math

    return math.comb(max_order + 6, 6)
