"""Collision-coefficient convolutions: diffusion matrix, reaction scalar,
and their derivative variants.

For a density f the coefficients are velocity convolutions per spatial
point: the diffusion matrix abar = a * f, its divergence bbar_i =
(d_j a_ij) * f, and the reaction scalar cbar = c * f.  Derivatives in v of
abar ride the kernel analytically up to second order (the kernel-derivative
tables), and any remaining derivatives move onto f; x-derivatives always
move onto f since the kernel carries no x dependence.

Kernel tables and their FFTs are cached per (grid, gamma); spatial slices
convolve independently and are threaded when LANDAULAB_THREADS asks for it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engines, kernels
from .grid import Field, GridSpec, derivative
from .multiindex import MultiIndex, ZERO_INDEX

__all__ = ["CoefficientField", "abar", "cbar", "abar_derived",
           "collision_operator", "KernelTables"]

_SYM2 = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]

CONTRACTIONS = ("plain", "v_over_bracket", "vv_over_bracket2", "trace_over_bracket")


def _thread_count() -> int:
    raw = os.environ.get("LANDAULAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class CoefficientField:
    """Diffusion matrix and reaction scalar of one linearization input."""

    grid: GridSpec
    abar: np.ndarray  # (*x_shape, Nv, Nv, Nv, 3, 3), symmetric in the last two
    cbar: np.ndarray  # (*x_shape, Nv, Nv, Nv)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.abar)) and np.all(np.isfinite(self.cbar))):
            raise ValueError("coefficient field contains non-finite entries")

    @property
    def trace(self) -> np.ndarray:
        return np.trace(self.abar, axis1=-2, axis2=-1)

    def max_matrix_norm(self) -> float:
        """max over grid points of the matrix row-sum norm."""
        return float(np.abs(self.abar).sum(axis=-1).max())


class KernelTables:
    """Offset-lattice samples of the kernel family plus cached FFTs."""

    _cache: dict = {}

    def __init__(self, grid: GridSpec, gamma: float):
        self.grid = grid
        self.gamma = gamma
        self._tables: dict[str, np.ndarray] = {}
        self._ffts: dict[str, np.ndarray] = {}

    @classmethod
    def get(cls, grid: GridSpec, gamma: float) -> "KernelTables":
        key = (grid.v_count, grid.v_extent, gamma)
        if key not in cls._cache:
            cls._cache[key] = cls(grid, gamma)
        return cls._cache[key]

    def _offsets(self) -> np.ndarray:
        z1, z2, z3 = engines.offset_lattice(self.grid.v_count, self.grid.h_v)
        return np.stack([z1, z2, z3], axis=-1)

    def table(self, name: str) -> np.ndarray:
        if name in self._tables:
            return self._tables[name]
        z = self._offsets()
        g = self.gamma
        if name == "a":
            full = kernels.kernel_matrix(z, g)
            tab = np.stack([full[..., i, j] for i, j in _SYM2])
        elif name == "b":
            full = kernels.kernel_divergence(z, g)
            tab = np.moveaxis(full, -1, 0)
        elif name == "c":
            tab = kernels.kernel_c(z, g)[None]
        elif name == "da":
            full = kernels.kernel_matrix_derivative(z, g)
            tab = np.stack([full[..., i, j, k] for i, j in _SYM2 for k in range(3)])
        elif name == "d2a":
            full = kernels.kernel_matrix_second_derivative(z, g)
            tab = np.stack(
                [full[..., i, j, k, l] for i, j in _SYM2 for k, l in _SYM2]
            )
        elif name in ("r2pg", "r1pg", "rg"):
            # |z|^{2+gamma}, |z|^{1+gamma}, |z|^gamma majorant kernels
            p = {"r2pg": 2.0, "r1pg": 1.0, "rg": 0.0}[name] + g
            r = np.linalg.norm(z, axis=-1)
            tab = (np.ones_like(r) if p == 0.0 else r ** p)[None]
        else:
            raise KeyError(name)
        self._tables[name] = tab
        return tab

    def fft(self, name: str) -> np.ndarray:
        if name not in self._ffts:
            self._ffts[name] = engines.kernel_fft(self.table(name), self.grid.v_count)
        return self._ffts[name]

    def convolve(self, name: str, field_v: np.ndarray, engine: str) -> np.ndarray:
        vol = self.grid.v_cell_volume
        if engine == "direct":
            return engines.direct_convolve(self.table(name), field_v, vol)
        if engine == "fft":
            return engines.fft_convolve(self.fft(name), field_v, vol)
        raise ValueError(f"unknown engine {engine!r} (want 'direct' or 'fft')")


def _unpack_sym(packed: np.ndarray) -> np.ndarray:
    """(6, ...) symmetric-pair stack -> (..., 3, 3)."""
    out = np.empty(packed.shape[1:] + (3, 3))
    for comp, (i, j) in enumerate(_SYM2):
        out[..., i, j] = packed[comp]
        out[..., j, i] = packed[comp]
    return out


def _map_x_slices(fn, values: np.ndarray, grid: GridSpec):
    """Apply a velocity-space operation to every spatial slice."""
    if grid.x_axes == 0:
        return fn(values)[None]
    flat = values.reshape((-1,) + values.shape[grid.x_axes:])
    workers = _thread_count()
    if workers > 1 and flat.shape[0] > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slices = list(pool.map(fn, flat))
    else:
        slices = [fn(s) for s in flat]
    return np.stack(slices)


def _conv_field(f: Field, name: str, gamma: float, engine: str) -> np.ndarray:
    """Convolve a kernel stack against every spatial slice of f.

    Returns (C, *x_shape, Nv, Nv, Nv).
    """
    tables = KernelTables.get(f.grid, gamma)
    out = _map_x_slices(lambda s: tables.convolve(name, s, engine), f.values, f.grid)
    # slices-first -> components-first
    out = np.moveaxis(out, 1, 0)
    shape = (out.shape[0],) + f.grid.shape
    return out.reshape(shape)


def abar(f: Field, gamma: float, engine: str = "fft") -> CoefficientField:
    """Diffusion matrix and reaction scalar of f in one pass."""
    packed = _conv_field(f, "a", gamma, engine)
    cb = _conv_field(f, "c", gamma, engine)[0]
    return CoefficientField(f.grid, _unpack_sym(packed), cb)


def cbar(f: Field, gamma: float, engine: str = "fft") -> np.ndarray:
    """Reaction scalar c * f alone."""
    return _conv_field(f, "c", gamma, engine)[0]


def bbar(f: Field, gamma: float, engine: str = "fft") -> np.ndarray:
    """Divergence of the diffusion matrix, (d_j a_ij) * f; (*shape, 3)."""
    packed = _conv_field(f, "b", gamma, engine)
    return np.moveaxis(packed, 0, -1)


def abar_derived(
    f: Field,
    m: MultiIndex = ZERO_INDEX,
    v_kernel_order: int = 0,
    contraction: str = "plain",
    gamma: float = 0.0,
    engine: str = "fft",
) -> np.ndarray:
    """Derivative variants of the diffusion coefficient.

    Convolves the ``v_kernel_order``-th kernel derivative against
    d^alpha d^beta f, so the returned tensor is
    d^{alpha}_x d^{beta + nu}_v abar with |nu| = v_kernel_order riding the
    kernel analytically.  Component axes trail: (..., 3, 3) for order 0,
    plus one (or two) kernel-derivative axes.

    A non-plain contraction multiplies by the velocity factor *outside* the
    convolution (v_i/<v>, v_i v_j/<v>^2, or delta_ij/<v>) and requires
    v_kernel_order = 0; kernel derivatives beyond second order are handled
    by moving derivatives onto f before calling this.
    """
    if v_kernel_order not in (0, 1, 2):
        raise ValueError("v_kernel_order must be 0, 1 or 2")
    if contraction not in CONTRACTIONS:
        raise ValueError(f"unknown contraction {contraction!r}")
    if contraction != "plain" and v_kernel_order != 0:
        raise ValueError("contractions are only supported with v_kernel_order 0")
    df = derivative(f, m)
    name = {0: "a", 1: "da", 2: "d2a"}[v_kernel_order]
    packed = _conv_field(df, name, gamma, engine)
    if v_kernel_order == 0:
        tensor = _unpack_sym(packed)
    elif v_kernel_order == 1:
        shaped = packed.reshape((6, 3) + packed.shape[1:])
        full = np.empty(packed.shape[1:] + (3, 3, 3))
        for comp, (i, j) in enumerate(_SYM2):
            for k in range(3):
                full[..., i, j, k] = shaped[comp, k]
                full[..., j, i, k] = shaped[comp, k]
        tensor = full
    else:
        shaped = packed.reshape((6, 6) + packed.shape[1:])
        full = np.empty(packed.shape[1:] + (3, 3, 3, 3))
        for ci, (i, j) in enumerate(_SYM2):
            for ck, (k, l) in enumerate(_SYM2):
                val = shaped[ci, ck]
                full[..., i, j, k, l] = val
                full[..., j, i, k, l] = val
                full[..., i, j, l, k] = val
                full[..., j, i, l, k] = val
        tensor = full
    if contraction == "plain":
        return tensor
    g = f.grid
    v1, v2, v3 = g.v_mesh()
    vvec = np.stack([v1, v2, v3], axis=-1)
    bracket = g.bracket()
    if contraction == "v_over_bracket":
        factor = g.broadcast_v(vvec / bracket[..., None])
        return np.einsum("...ij,...i->...j", tensor, factor)
    if contraction == "vv_over_bracket2":
        factor = g.broadcast_v(vvec / bracket[..., None])
        return np.einsum("...ij,...i,...j->...", tensor, factor, factor)
    # trace_over_bracket
    return np.einsum("...ii->...", tensor) / g.broadcast_v(bracket)


def collision_operator(f: Field, gamma: float, engine: str = "fft") -> np.ndarray:
    """Discrete collision operator in flux form,
    Q(f, f) = d_{v_i} ( abar_ij d_{v_j} f  -  bbar_i f ).

    The flux divergence uses the grid's central stencils; the coefficient
    divergence bbar comes from the analytic kernel tables, so the discrete
    moment defects of Q shrink at the stencil's order.
    """
    coeffs = abar(f, gamma, engine)
    bb = bbar(f, gamma, engine)
    g = f.grid
    flux = np.empty(g.shape + (3,))
    grads = [
        derivative(f, MultiIndex(beta=tuple(1 if a == j else 0 for a in range(3)))).values
        for j in range(3)
    ]
    for i in range(3):
        fi = -bb[..., i] * f.values
        for j in range(3):
            fi = fi + coeffs.abar[..., i, j] * grads[j]
        flux[..., i] = fi
    out = np.zeros(g.shape)
    for i in range(3):
        comp = Field(g, flux[..., i], f.time)
        idx = MultiIndex(beta=tuple(1 if a == i else 0 for a in range(3)))
        out += derivative(comp, idx).values
    return out
