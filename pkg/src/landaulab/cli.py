"""Batch runner: verification suites and simulation campaigns.

Configuration comes from an INI-style file (sections of key=value) plus
command-line flags; flags win.  Every artifact carries a provenance block
(config hash, package version, grid) and is byte-reproducible for a fixed
seed: reports are JSON with sorted keys, norm time-series are CSV, field
snapshots use the binary format of the grid module.

Exit codes: 0 all checks pass, 2 configuration error, 10 weight-audit
violation, 11 kernel check failure, 12 coefficient-bound failure, 13
stability abort, 14 contraction abort.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .bounds import verify_coefficient_bounds
from .grid import GridSpec, write_snapshot
from .kernels import (confirm_contraction_form, kernel_c_oracle,
                      kernel_c_closed_form, kernel_matrix)
from .multiindex import MultiIndex
from .norms import EnergyReport
from .picard import iterate, select_parameters
from .profiles import maxwellian, polynomial_decay, random_smooth
from .solver import (ExponentialWeight, SolverConfig, SolverInstability,
                     boundary_decay_audit, solve_linearized, to_g)
from .weights import ModelParams, WeightHierarchy, check_split_inequalities

__all__ = ["RunConfig", "run", "export_csv", "main", "EXIT_CODES"]

EXIT_CODES = {
    "ok": 0,
    "config": 2,
    "weight_audit": 10,
    "kernel": 11,
    "bound": 12,
    "stability": 13,
    "contraction": 14,
}

MODES = ("audit-weights", "verify-kernels", "verify-bounds", "solve-linear",
         "picard", "boundary-decay")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    gamma: float = 0.0
    eta: float = 0.1
    v_count: int = 16
    x_count: int = 0  # 0 = spatially homogeneous
    v_extent: float = 6.0
    x_extent: float = float(np.pi)
    R: float | None = None
    epsilon: float = 1e-3
    kappa: float | None = None
    d0: float = 1.0
    T: float | None = None
    seed: int = 0
    out: str = "out"
    max_order: int = 2
    engine: str = "fft"
    mass: float = 0.5
    dt: float | None = None
    n_snapshots: int = 5
    sample_count: int = 200
    c_emp: float | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.v_count < 8:
            raise ConfigError(f"grid needs at least v8, got v{self.v_count}")
        if self.engine not in ("fft", "direct"):
            raise ConfigError(f"engine must be fft or direct, got {self.engine!r}")

    def grid(self) -> GridSpec:
        x_axes = 1 if self.x_count else 0
        return GridSpec(v_count=self.v_count, v_extent=self.v_extent,
                        x_axes=x_axes, x_count=self.x_count or 1,
                        x_extent=self.x_extent)

    def radius(self) -> float:
        return self.R if self.R is not None else self.v_extent / 1.2

    def canonical(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_FLOAT_KEYS = {"gamma", "eta", "v_extent", "x_extent", "R", "epsilon", "kappa",
               "d0", "T", "mass", "dt", "c_emp"}
_INT_KEYS = {"v_count", "x_count", "seed", "max_order", "n_snapshots",
             "sample_count"}


def _coerce(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    return raw


def load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key [{section}] {key}")
            out[key] = _coerce(key, raw)
    return out


def _parse_grid(text: str) -> dict:
    out = {}
    for token in text.split(","):
        token = token.strip()
        if token.startswith("v"):
            out["v_count"] = int(token[1:])
        elif token.startswith("x"):
            out["x_count"] = int(token[1:])
        else:
            raise ConfigError(f"grid token {token!r} (expected vN[,xN])")
    if "v_count" not in out:
        raise ConfigError("grid must specify vN")
    return out


def build_config(argv: list[str]) -> RunConfig:
    ap = argparse.ArgumentParser(prog="landaulab", add_help=True)
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--config")
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--eta", type=float)
    ap.add_argument("--grid", help="vN[,xN], e.g. v24 or v24,x16")
    ap.add_argument("--R", type=float)
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--kappa", type=float)
    ap.add_argument("--T", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--max-order", type=int, dest="max_order")
    ap.add_argument("--d0", type=float)
    ap.add_argument("--mass", type=float)
    ap.add_argument("--v-extent", type=float, dest="v_extent")
    ap.add_argument("--engine", choices=("fft", "direct"))
    ap.add_argument("--c-emp", type=float, dest="c_emp")
    ns = ap.parse_args(argv)

    merged: dict = {}
    if ns.config:
        merged.update(load_config(ns.config))
    for key in ("mode", "gamma", "eta", "R", "epsilon", "kappa", "T", "seed",
                "out", "max_order", "d0", "mass", "v_extent", "engine", "c_emp"):
        val = getattr(ns, key)
        if val is not None:
            merged[key] = val
    if ns.grid:
        merged.update(_parse_grid(ns.grid))
    if "mode" not in merged:
        raise ConfigError("mode is required (--mode or config file)")
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# Artifacts
# --------------------------------------------------------------------------


def _provenance(cfg: RunConfig) -> dict:
    return {
        "config_hash": cfg.hash(),
        "package_version": __version__,
        "config": cfg.canonical(),
        "grid": {"v_count": cfg.v_count, "x_count": cfg.x_count,
                 "v_extent": cfg.v_extent, "x_extent": cfg.x_extent},
    }


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    return obj


def _write_json(cfg: RunConfig, name: str, payload: dict) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    doc = _jsonify({"provenance": _provenance(cfg), **payload})
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def export_csv(report: EnergyReport) -> str:
    """Norm time series: one row per snapshot, columns t, Y per derivative
    pair (lexicographic), X total.  Full-precision floats so parse-back is
    exact."""
    if not report.times:
        raise ValueError("empty report")
    cols = ["t"] + [f"Y[{k}]" for k in report.index_keys] + ["X_total"]
    lines = [",".join(cols)]
    for i, t in enumerate(report.times):
        row = [repr(float(t))]
        row += [repr(float(report.y_values[k][i])) for k in report.index_keys]
        row.append(repr(float(report.x_total[i])))
        lines.append(",".join(row))
    return "\r\n".join(lines) + "\r\n"


def _write_csv(cfg: RunConfig, name: str, report: EnergyReport) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(export_csv(report))
    return path


# --------------------------------------------------------------------------
# Modes
# --------------------------------------------------------------------------


def _mode_audit_weights(cfg: RunConfig) -> int:
    params = ModelParams(cfg.gamma, cfg.eta)
    report = check_split_inequalities(WeightHierarchy.main(params))
    _write_json(cfg, "weight_audit.json", report.to_dict())
    print(f"weight audit: {report.total_cases} cases, "
          f"{report.total_violations} violations")
    return EXIT_CODES["ok"] if report.passed else EXIT_CODES["weight_audit"]


def _mode_verify_kernels(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    gamma = cfg.gamma
    z = rng.normal(size=(10000, 3))
    xi = rng.normal(size=(10000, 3))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    A = kernel_matrix(z, gamma)
    null = float(np.abs(np.einsum("pij,pj->pi", A, z)).max())
    quad = np.einsum("pi,pij,pj->p", xi, A, xi)
    zh = z / np.linalg.norm(z, axis=1, keepdims=True)
    r = np.linalg.norm(z, axis=1)
    expected = r ** (gamma + 2.0) * (1.0 - np.einsum("pi,pi->p", zh, xi) ** 2)
    quad_err = float(np.abs(quad - expected).max() / np.abs(expected).max())
    psd_min = float(quad.min())
    gate = confirm_contraction_form(gamma, n_points=256, seed=cfg.seed)
    pts = rng.uniform(-2, 2, size=(1000, 3))
    pts = pts[np.linalg.norm(pts, axis=1) > 0.3]
    oracle_dev = float(np.max(np.abs(
        kernel_c_oracle(pts, gamma) - kernel_c_closed_form(pts, gamma)
    ) / np.maximum(np.abs(kernel_c_closed_form(pts, gamma)), 1e-30)))
    payload = {
        "gamma": gamma,
        "null_space_max": null,
        "projection_identity_rel_err": quad_err,
        "psd_min_quadratic_form": psd_min,
        "contraction_gate_rel_dev": gate,
        "contraction_oracle_rel_dev": oracle_dev,
    }
    ok = null < 1e-10 and quad_err < 1e-10 and psd_min > -1e-12 and oracle_dev < 1e-6
    payload["passed"] = bool(ok)
    _write_json(cfg, "kernel_report.json", payload)
    print(f"kernel checks: null={null:.2e} identity={quad_err:.2e} "
          f"oracle={oracle_dev:.2e} -> {'pass' if ok else 'FAIL'}")
    return EXIT_CODES["ok"] if ok else EXIT_CODES["kernel"]


def _mode_verify_bounds(cfg: RunConfig) -> int:
    grid = cfg.grid()
    fields_to_check = [
        ("maxwellian", maxwellian(grid, mass=cfg.mass)),
        ("random_smooth", random_smooth(grid, seed=cfg.seed)),
    ]
    ok = True
    payload = {"gamma": cfg.gamma, "reports": {}}
    for name, f in fields_to_check:
        rep = verify_coefficient_bounds(
            f, cfg.gamma, sample_count=cfg.sample_count, d0=cfg.d0,
            engine=cfg.engine, seed=cfg.seed,
        )
        payload["reports"][name] = rep.to_dict()
        ok &= rep.passed
    payload["passed"] = bool(ok)
    _write_json(cfg, "bound_report.json", payload)
    print(f"coefficient bounds: {'pass' if ok else 'FAIL'}")
    return EXIT_CODES["ok"] if ok else EXIT_CODES["bound"]


def _solver_config(cfg: RunConfig, kappa: float) -> SolverConfig:
    return SolverConfig(
        params=ModelParams(cfg.gamma, cfg.eta),
        weight=ExponentialWeight(d0=cfg.d0, kappa=kappa),
        R=cfg.radius(),
        epsilon=cfg.epsilon,
        dt=cfg.dt,
        max_derivative_order=cfg.max_order,
        engine=cfg.engine,
    )


def _mode_solve_linear(cfg: RunConfig) -> int:
    grid = cfg.grid()
    kappa = cfg.kappa if cfg.kappa is not None else 2.0
    scfg = _solver_config(cfg, kappa)
    f0 = maxwellian(grid, mass=cfg.mass * 0.2,
                    x_amplitude=0.3 if grid.x_axes else 0.0)
    g0 = to_g(f0, scfg.weight, 0.0)
    h = maxwellian(grid, mass=cfg.mass)
    T = cfg.T if cfg.T is not None else 0.5 * scfg.weight.T0
    try:
        res = solve_linearized(g0, h, scfg, T, n_snapshots=cfg.n_snapshots)
    except SolverInstability as exc:
        _write_json(cfg, "energy_report.json", {"aborted": str(exc)})
        print(f"stability abort: {exc}")
        return EXIT_CODES["stability"]
    _write_json(cfg, "energy_report.json", res.energy.to_dict())
    _write_json(cfg, "term_ledger.json", res.ledger.to_dict())
    _write_csv(cfg, "norms.csv", res.energy)
    write_snapshot(res.final(), os.path.join(cfg.out, "final_state.lndf"))
    print(f"linear solve: C_fit={res.gronwall['C']:.4g} "
          f"bound_holds={res.gronwall['bound_holds']} min_F={res.min_f_ratio:.2e}")
    return EXIT_CODES["ok"]


def _mode_picard(cfg: RunConfig) -> int:
    grid = cfg.grid()
    f0 = maxwellian(grid, mass=cfg.mass)
    w_probe = ExponentialWeight(d0=cfg.d0, kappa=1.0)
    g0 = to_g(f0, w_probe, 0.0)
    if cfg.c_emp is not None:
        c_emp = cfg.c_emp
    else:
        probe = select_parameters(g0, d0=cfg.d0, gamma=cfg.gamma, eta=cfg.eta,
                                  C_emp=1.0, max_order=min(cfg.max_order, 2),
                                  epsilon=cfg.epsilon)
        kappa_target = cfg.kappa if cfg.kappa is not None else 2.0
        c_emp = kappa_target / probe.M_h
    params = select_parameters(g0, d0=cfg.d0, gamma=cfg.gamma, eta=cfg.eta,
                               C_emp=c_emp, max_order=min(cfg.max_order, 2),
                               epsilon=cfg.epsilon)
    res = iterate(g0, params, R=cfg.radius(), T=cfg.T,
                  n_snapshots=cfg.n_snapshots)
    payload = {
        "params": params.to_dict(),
        "history": res.history.to_dict(),
        "T_used": res.T_used,
        "restarts": res.restarts,
        "r_min_satisfied": res.r_min_satisfied,
    }
    _write_json(cfg, "contraction_history.json", payload)
    if res.trajectory:
        write_snapshot(res.final(), os.path.join(cfg.out, "picard_final.lndf"))
    ok = res.history.converged and not res.history.aborted
    print(f"picard: converged={res.history.converged} "
          f"iterations={len(res.history.diff_norms)} aborted={res.history.aborted!r}")
    return EXIT_CODES["ok"] if ok else EXIT_CODES["contraction"]


def _mode_boundary_decay(cfg: RunConfig) -> int:
    grid = cfg.grid()
    kappa = cfg.kappa if cfg.kappa is not None else 2.0
    radii = [grid.v_extent / 2.0, grid.v_extent / 1.5]
    results = []
    # heavy-tailed damped variable: its f-representation carries the full
    # exponential decay, and the cutoff-ramp integrands stay visible in R
    g0 = polynomial_decay(grid, power=22.0, scale=cfg.mass)
    h = maxwellian(grid, mass=cfg.mass)
    for R in radii:
        scfg = SolverConfig(
            params=ModelParams(cfg.gamma, cfg.eta),
            weight=ExponentialWeight(d0=cfg.d0, kappa=kappa),
            R=R, epsilon=cfg.epsilon, dt=cfg.dt,
            max_derivative_order=cfg.max_order, engine=cfg.engine,
        )
        T = cfg.T if cfg.T is not None else 0.25 * scfg.weight.T0
        try:
            res = solve_linearized(g0, h, scfg, T, n_snapshots=cfg.n_snapshots)
        except SolverInstability as exc:
            _write_json(cfg, "boundary_decay.json", {"aborted": str(exc)})
            print(f"stability abort at R={R}: {exc}")
            return EXIT_CODES["stability"]
        results.append((R, res))
    audit = boundary_decay_audit(results)
    gamma, delta = cfg.gamma, ModelParams(cfg.gamma, cfg.eta).delta_float
    audit["theory_exponent"] = gamma - 1.0 - delta
    _write_json(cfg, "boundary_decay.json", audit)
    print(f"boundary decay: raw={audit['raw_exponent']:.3f} "
          f"normalized={audit['normalized_exponent']:.3f} "
          f"(theory {audit['theory_exponent']:.3f})")
    return EXIT_CODES["ok"]


_MODE_HANDLERS = {
    "audit-weights": _mode_audit_weights,
    "verify-kernels": _mode_verify_kernels,
    "verify-bounds": _mode_verify_bounds,
    "solve-linear": _mode_solve_linear,
    "picard": _mode_picard,
    "boundary-decay": _mode_boundary_decay,
}


def run(cfg: RunConfig) -> int:
    cfg.validate()
    return _MODE_HANDLERS[cfg.mode](cfg)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    except SystemExit as exc:  # argparse --help or bad flag
        return int(exc.code or 0)
    try:
        return run(cfg)
    except SolverInstability as exc:
        print(f"stability abort: {exc}", file=sys.stderr)
        return EXIT_CODES["stability"]


if __name__ == "__main__":
    sys.exit(main())
