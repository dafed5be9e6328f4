"""Truncated phase-space grid, fields, and mixed finite-difference derivatives.

Space is a periodic box with 0, 1 or 3 active axes (0 = spatially
homogeneous); velocity is always a 3-D box [-V, V]^3 on a cell-centered
lattice, so the difference lattice is symmetric and convolutions tabulate
exactly.  Mixed derivatives d^alpha_x d^beta_v are applied axis by axis with
central stencils (periodic wrap in x, biased stencils at the velocity faces);
the stencil weights come from the standard divided-difference recursion, so
any derivative order / accuracy pair the grid can resolve is available.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .multiindex import MultiIndex

__all__ = ["GridSpec", "Field", "japanese_bracket", "derivative",
           "write_snapshot", "read_snapshot"]

_MAGIC = b"LNDF"
_VERSION = 1


def japanese_bracket(v) -> float | np.ndarray:
    """sqrt(1 + |v|^2) for a single 3-vector or an array of them (last axis 3)."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


@dataclass(frozen=True)
class GridSpec:
    v_count: int
    v_extent: float
    x_axes: int = 0
    x_count: int = 1
    x_extent: float = np.pi
    stencil_order: int = 2

    def __post_init__(self):
        if self.x_axes not in (0, 1, 3):
            raise ValueError("x_axes must be 0, 1 or 3")
        if self.v_count < 8 or (self.x_axes and self.x_count < 8):
            raise ValueError("need at least 8 points per active axis")
        if self.v_extent <= 0 or self.x_extent <= 0:
            raise ValueError("extents must be positive")
        if self.stencil_order not in (2, 4):
            raise ValueError("stencil_order must be 2 or 4")

    # -- lattices ----------------------------------------------------------
    @property
    def h_v(self) -> float:
        return 2.0 * self.v_extent / self.v_count

    @property
    def h_x(self) -> float:
        return 2.0 * self.x_extent / self.x_count

    @property
    def v_axis(self) -> np.ndarray:
        """Cell-centered velocity lattice, symmetric about 0."""
        return -self.v_extent + (np.arange(self.v_count) + 0.5) * self.h_v

    @property
    def x_axis(self) -> np.ndarray:
        return -self.x_extent + np.arange(self.x_count) * self.h_x

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.x_count,) * self.x_axes + (self.v_count,) * 3

    @property
    def ndim(self) -> int:
        return self.x_axes + 3

    @property
    def v_cell_volume(self) -> float:
        return self.h_v ** 3

    @property
    def x_cell_measure(self) -> float:
        return self.h_x ** self.x_axes if self.x_axes else 1.0

    def v_mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(self.v_axis, self.v_axis, self.v_axis, indexing="ij")

    def bracket(self) -> np.ndarray:
        """<v> on the velocity lattice, shape (Nv, Nv, Nv)."""
        return _bracket_cached(self.v_count, self.v_extent)

    def v_norm(self) -> np.ndarray:
        v1, v2, v3 = self.v_mesh()
        return np.sqrt(v1 * v1 + v2 * v2 + v3 * v3)

    def broadcast_v(self, values: np.ndarray) -> np.ndarray:
        """Reshape a (Nv,Nv,Nv) array so it broadcasts over x axes."""
        return values.reshape((1,) * self.x_axes + values.shape)

    def is_v_axis(self, axis: int) -> bool:
        return axis >= self.x_axes


@lru_cache(maxsize=32)
def _bracket_cached(v_count: int, v_extent: float) -> np.ndarray:
    ax = -v_extent + (np.arange(v_count) + 0.5) * (2.0 * v_extent / v_count)
    v1, v2, v3 = np.meshgrid(ax, ax, ax, indexing="ij")
    out = np.sqrt(1.0 + v1 * v1 + v2 * v2 + v3 * v3)
    out.flags.writeable = False
    return out


@dataclass
class Field:
    """Real-valued sample on the phase-space grid at one simulation time."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    def integrate(self) -> float:
        """Plain phase-space integral (uniform-lattice quadrature)."""
        return float(self.values.sum()) * self.grid.v_cell_volume * self.grid.x_cell_measure

    def v_moment(self, weight: np.ndarray | float = 1.0) -> np.ndarray | float:
        """Velocity integral of weight * f per spatial point."""
        w = weight if np.isscalar(weight) else self.grid.broadcast_v(weight)
        vax = tuple(range(self.grid.x_axes, self.grid.ndim))
        return (self.values * w).sum(axis=vax) * self.grid.v_cell_volume

    def boundary_decay(self) -> float:
        """max |f| on the velocity-box faces relative to the global max.

        The whole-space problem is truncated to a box; runs should flag when
        this exceeds ~1e-8 (the truncation is then visible).
        """
        vals = self.values
        peak = float(np.abs(vals).max())
        if peak == 0.0:
            return 0.0
        worst = 0.0
        for axis in range(self.grid.x_axes, self.grid.ndim):
            face0 = np.take(vals, 0, axis=axis)
            face1 = np.take(vals, -1, axis=axis)
            worst = max(worst, float(np.abs(face0).max()), float(np.abs(face1).max()))
        return worst / peak


# --------------------------------------------------------------------------
# Finite-difference machinery
# --------------------------------------------------------------------------


def fd_weights(x0: float, nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Divided-difference recursion on arbitrary nodes; exact for polynomials
    up to degree len(nodes)-1.
    """
    n = len(nodes)
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _stencil_size(deriv: int, accuracy: int) -> int:
    return 2 * ((deriv - 1) // 2) + 1 + accuracy


@lru_cache(maxsize=256)
def derivative_matrix(n: int, h: float, deriv: int, accuracy: int,
                      periodic: bool) -> np.ndarray:
    """Dense one-axis derivative operator (n x n).

    Central stencils in the interior; periodic wrap or biased (one-sided)
    stencils at the ends.  Cached per configuration; applied via tensordot.
    """
    if deriv == 0:
        return np.eye(n)
    m = _stencil_size(deriv, accuracy)
    if m > n:
        raise ValueError(
            f"stencil of size {m} (derivative {deriv}, accuracy {accuracy}) "
            f"does not fit on an axis of {n} points"
        )
    half = m // 2
    nodes = (np.arange(m) - half) * h
    w_central = fd_weights(0.0, nodes, deriv)
    D = np.zeros((n, n))
    if periodic:
        for i in range(n):
            for s, w in zip(range(-half, half + 1), w_central):
                D[i, (i + s) % n] += w
        return D
    for i in range(n):
        lo = min(max(i - half, 0), n - m)
        if lo == i - half:
            D[i, lo:lo + m] = w_central
        else:
            nodes_b = (np.arange(lo, lo + m) - i) * h
            D[i, lo:lo + m] = fd_weights(0.0, nodes_b, deriv)
    return D


def _apply_axis(values: np.ndarray, D: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(D, values, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def derivative(f: Field, m: MultiIndex, accuracy: int | None = None) -> Field:
    """d^alpha_x d^beta_v f on the grid.

    Spatial derivatives on inactive axes of a homogeneous (or 1-D) run are
    identically zero.  Periodic wrap in x, biased stencils at the v faces.
    """
    g = f.grid
    acc = g.stencil_order if accuracy is None else accuracy
    vals = f.values
    active_alpha = m.alpha[: g.x_axes]
    if sum(m.alpha) > sum(active_alpha):
        # derivative along a frozen axis of a lower-dimensional run
        return f.with_values(np.zeros_like(vals))
    for axis, k in enumerate(active_alpha):
        if k:
            D = derivative_matrix(g.x_count, g.h_x, k, acc, True)
            vals = _apply_axis(vals, D, axis)
    for j, k in enumerate(m.beta):
        if k:
            D = derivative_matrix(g.v_count, g.h_v, k, acc, False)
            vals = _apply_axis(vals, D, g.x_axes + j)
    return f.with_values(vals)


# --------------------------------------------------------------------------
# Binary snapshot format
# --------------------------------------------------------------------------
#
# Little-endian header: magic "LNDF", version u32, active x-axes u32,
# per-axis counts u32[6], extents f64[2] (x, v), time f64; then the values
# row-major (x-major, then v).


def write_snapshot(f: Field, path) -> None:
    g = f.grid
    counts = [g.x_count if i < g.x_axes else 0 for i in range(3)]
    counts += [g.v_count] * 3
    header = _MAGIC + struct.pack(
        "<II6Iddd", _VERSION, g.x_axes, *counts, g.x_extent, g.v_extent, f.time
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path, stencil_order: int = 2) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a field snapshot (magic {magic!r})")
        version, x_axes = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        counts = struct.unpack("<6I", fh.read(24))
        x_extent, v_extent, time = struct.unpack("<ddd", fh.read(24))
        grid = GridSpec(
            v_count=counts[3],
            v_extent=v_extent,
            x_axes=x_axes,
            x_count=counts[0] if x_axes else 1,
            x_extent=x_extent,
            stencil_order=stencil_order,
        )
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(grid.shape)
        return Field(grid, data.copy(), time)
