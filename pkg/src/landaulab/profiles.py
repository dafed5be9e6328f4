"""Initial-data and test-field profiles on the phase-space grid."""

from __future__ import annotations

import numpy as np

from .grid import Field, GridSpec

__all__ = ["maxwellian", "gaussian_bump", "random_smooth", "polynomial_decay"]


def _x_modulation(grid: GridSpec, amplitude: float, mode: int = 1) -> np.ndarray:
    """Nonnegative periodic modulation 1 + amplitude*cos(mode * pi * x / L)
    over the active spatial axes; 1.0 in homogeneous mode."""
    if grid.x_axes == 0 or amplitude == 0.0:
        return np.ones((1,) * grid.x_axes + (1, 1, 1))
    if not -1.0 < amplitude < 1.0:
        raise ValueError("modulation amplitude must keep the profile positive")
    out = np.ones((grid.x_count,) * grid.x_axes)
    k = mode * np.pi / grid.x_extent
    for axis in range(grid.x_axes):
        shape = [1] * grid.x_axes
        shape[axis] = grid.x_count
        out = out * (1.0 + amplitude * np.cos(k * grid.x_axis)).reshape(shape)
    return out.reshape(out.shape + (1, 1, 1))


def maxwellian(
    grid: GridSpec,
    mass: float = 1.0,
    temperature: float = 1.0,
    mean=(0.0, 0.0, 0.0),
    x_amplitude: float = 0.0,
    time: float = 0.0,
) -> Field:
    """Gaussian velocity profile of prescribed mass, optionally modulated in x."""
    v1, v2, v3 = grid.v_mesh()
    mu = np.asarray(mean, dtype=float)
    q = (v1 - mu[0]) ** 2 + (v2 - mu[1]) ** 2 + (v3 - mu[2]) ** 2
    core = mass * (2.0 * np.pi * temperature) ** -1.5 * np.exp(-q / (2.0 * temperature))
    vals = grid.broadcast_v(core) * _x_modulation(grid, x_amplitude)
    return Field(grid, np.broadcast_to(vals, grid.shape).copy(), time)


def gaussian_bump(
    grid: GridSpec,
    center=(0.0, 0.0, 0.0),
    width: float = 1.0,
    amplitude: float = 1.0,
    time: float = 0.0,
) -> Field:
    v1, v2, v3 = grid.v_mesh()
    c = np.asarray(center, dtype=float)
    q = (v1 - c[0]) ** 2 + (v2 - c[1]) ** 2 + (v3 - c[2]) ** 2
    core = amplitude * np.exp(-q / (2.0 * width ** 2))
    vals = np.broadcast_to(grid.broadcast_v(core), grid.shape).copy()
    return Field(grid, vals, time)


def random_smooth(
    grid: GridSpec,
    seed: int,
    n_bumps: int = 4,
    scale: float = 1.0,
    x_amplitude: float = 0.0,
    time: float = 0.0,
) -> Field:
    """Nonnegative, rapidly decaying sum of randomized Gaussian bumps."""
    rng = np.random.default_rng(seed)
    v1, v2, v3 = grid.v_mesh()
    core = np.zeros_like(v1)
    for _ in range(n_bumps):
        c = rng.uniform(-0.3 * grid.v_extent, 0.3 * grid.v_extent, size=3)
        w = rng.uniform(0.6, 1.6)
        amp = rng.uniform(0.2, 1.0)
        q = (v1 - c[0]) ** 2 + (v2 - c[1]) ** 2 + (v3 - c[2]) ** 2
        core += amp * np.exp(-q / (2.0 * w ** 2))
    core *= scale
    vals = grid.broadcast_v(core) * _x_modulation(grid, x_amplitude)
    return Field(grid, np.broadcast_to(vals, grid.shape).copy(), time)


def polynomial_decay(grid: GridSpec, power: float = 22.0, scale: float = 1.0,
                     time: float = 0.0) -> Field:
    """Heavy-tailed profile ~ <v>^{-power}; useful when boundary behaviour
    should stay visible instead of being buried by Gaussian decay."""
    core = scale * grid.bracket() ** (-power)
    vals = np.broadcast_to(grid.broadcast_v(core), grid.shape).copy()
    return Field(grid, vals, time)
