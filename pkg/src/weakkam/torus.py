"""Flat-torus geometry and uniform periodic grids.

All positions live on [0,1)^d with d in {1, 2}.  Displacements are always
reduced to the minimal periodic representative in [-1/2, 1/2)^d, so the
periodic distance never exceeds sqrt(d)/2.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def csv_float(v) -> str:
    """Shortest round-trip decimal form, identical across runs."""
    return repr(float(v))


def wrap(x):
    """Map coordinates to the fundamental domain [0,1)^d."""
    return np.asarray(x, dtype=float) % 1.0


def periodic_delta(a, b):
    """Minimal periodic displacement b - a, componentwise in [-1/2, 1/2)."""
    d = (np.asarray(b, dtype=float) - np.asarray(a, dtype=float) + 0.5) % 1.0 - 0.5
    return d


def periodic_distance(a, b):
    """Euclidean distance on the torus (last axis = coordinates)."""
    d = periodic_delta(a, b)
    if d.ndim == 0:
        return np.abs(d)
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with n points per axis on the d-torus."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"grid dim must be 1 or 2, got {self.dim}")
        if self.n < 2:
            raise ConfigurationError(f"grid N must be >= 2, got {self.n}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def size(self) -> int:
        return self.n**self.dim

    def points(self) -> np.ndarray:
        """Flattened coordinates, shape (size, dim)."""
        axis = np.arange(self.n) / self.n
        if self.dim == 1:
            return axis[:, None]
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=-1)

    def index_coords(self, flat_index) -> np.ndarray:
        """Coordinates of flat grid indices, shape (..., dim)."""
        idx = np.asarray(flat_index)
        if self.dim == 1:
            return (idx / self.n)[..., None]
        return np.stack([(idx // self.n) / self.n, (idx % self.n) / self.n], axis=-1)

    def shift_indices(self, offset) -> np.ndarray:
        """Flat index array mapping j -> index of (x_j - offset*dx).

        ``offset`` is an integer cell offset (scalar for d=1, pair for d=2).
        Used by the dynamic-programming kernels: the start point of the step
        ending at x_j with that offset is x_j - offset*dx, periodically.
        """
        if self.dim == 1:
            o = int(np.asarray(offset).reshape(()))
            return (np.arange(self.n) - o) % self.n
        o1, o2 = (int(v) for v in np.asarray(offset).reshape(2))
        i1 = (np.arange(self.n)[:, None] - o1) % self.n
        i2 = (np.arange(self.n)[None, :] - o2) % self.n
        return (i1 * self.n + i2).ravel()


def stencil_offsets(grid: Grid, v_max: float, dt: float) -> np.ndarray:
    """Integer cell offsets reachable at speed <= v_max in one step of dt.

    Returns shape (n_offsets, dim); always includes the zero offset.  Raises
    if the velocity window does not cover a single grid cell.
    """
    if v_max <= 0 or dt <= 0:
        raise ConfigurationError("v_max and dt must be positive")
    m = int(np.floor(v_max * dt / grid.dx + 1e-12))
    if m < 1:
        raise ConfigurationError(
            f"empty stencil: v_max*dt = {v_max * dt:g} is below one grid cell "
            f"dx = {grid.dx:g}"
        )
    m = min(m, grid.n // 2)
    rng = np.arange(-m, m + 1)
    if grid.dim == 1:
        return rng[:, None]
    o1, o2 = np.meshgrid(rng, rng, indexing="ij")
    offs = np.stack([o1.ravel(), o2.ravel()], axis=-1)
    keep = np.sum(offs**2, axis=1) <= (v_max * dt / grid.dx + 1e-12) ** 2
    return offs[keep]


@dataclass
class GridField:
    """Values of a scalar function on a periodic grid (one time slice)."""

    grid: Grid
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.size:
            raise ConfigurationError(
                f"field size {v.size} does not match grid size {self.grid.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("GridField values must be finite")
        self.values = v

    def copy(self) -> "GridField":
        return GridField(self.grid, self.values.copy())

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lipschitz_seminorm(self) -> float:
        """Max forward difference quotient over all axes."""
        out = 0.0
        for ax in range(self.grid.dim):
            sh = self._shaped()
            diff = np.abs(np.roll(sh, -1, axis=ax) - sh) / self.grid.dx
            out = max(out, float(np.max(diff)))
        return out

    def _shaped(self) -> np.ndarray:
        if self.grid.dim == 1:
            return self.values
        return self.values.reshape(self.grid.n, self.grid.n)


def interp_periodic(grid: Grid, values: np.ndarray, x) -> np.ndarray:
    """Periodic (bi)linear interpolation of flattened grid values at x."""
    pts = np.atleast_2d(np.asarray(x, dtype=float)) % 1.0
    n = grid.n
    s = pts * n
    i0 = np.floor(s).astype(int) % n
    frac = s - np.floor(s)
    if grid.dim == 1:
        i1 = (i0 + 1) % n
        v = values
        return v[i0[:, 0]] * (1 - frac[:, 0]) + v[i1[:, 0]] * frac[:, 0]
    v = values.reshape(n, n)
    j0, k0 = i0[:, 0], i0[:, 1]
    j1, k1 = (j0 + 1) % n, (k0 + 1) % n
    fa, fb = frac[:, 0], frac[:, 1]
    return (
        v[j0, k0] * (1 - fa) * (1 - fb)
        + v[j1, k0] * fa * (1 - fb)
        + v[j0, k1] * (1 - fa) * fb
        + v[j1, k1] * fa * fb
    )


@dataclass
class SpaceTimeField:
    """Stack of grid slices over uniform time steps; slice k is time k*dt."""

    grid: Grid
    dt: float
    values: np.ndarray  # shape (n_steps + 1, grid.size)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.grid.size:
            raise ConfigurationError("SpaceTimeField values must be (n_slices, grid.size)")
        self.values = v

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dt

    def slice(self, k: int) -> GridField:
        return GridField(self.grid, self.values[k].copy())

    def final(self) -> GridField:
        return self.slice(self.n_steps)

    def to_csv(self) -> str:
        """Slab export with columns k,t,j,x,u (x omits extra axes for d=2)."""
        buf = io.StringIO()
        pts = self.grid.points()
        if self.grid.dim == 1:
            buf.write("k,t,j,x,u\n")
            for k in range(self.values.shape[0]):
                t = csv_float(k * self.dt)
                for j in range(self.grid.size):
                    buf.write(f"{k},{t},{j},{csv_float(pts[j, 0])},{csv_float(self.values[k, j])}\n")
        else:
            buf.write("k,t,j,x1,x2,u\n")
            for k in range(self.values.shape[0]):
                t = csv_float(k * self.dt)
                for j in range(self.grid.size):
                    buf.write(
                        f"{k},{t},{j},{csv_float(pts[j, 0])},{csv_float(pts[j, 1])},"
                        f"{csv_float(self.values[k, j])}\n"
                    )
        return buf.getvalue()
