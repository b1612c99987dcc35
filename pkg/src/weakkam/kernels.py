"""One-step dynamic-programming kernels on the periodic grid.

A step advances a value slice by

    W'(x_j) = min_y [ W(y) + dt * L(y, u(y), (x_j - y)/dt) ]

where y ranges over grid points within periodic distance v_max*dt of x_j
and the displacement is the minimal periodic representative.  The kernel
precomputes, per admissible cell offset, the start-index map and the
u-independent part of the segment cost; only the u-coupling is recomputed
per step.

Quadrature of the potential along the straight segment ("left", "midpoint"
or "exact" trigonometric line integral) is fixed at kernel construction.

The per-destination min is a map over destination points with read-only
access to the previous slice, so results do not depend on thread count.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .models import HamiltonianModel
from .torus import Grid, stencil_offsets

QUADRATURES = ("left", "midpoint", "exact")


class StepKernel:
    """Precomputed DP step for a fixed (model, grid, dt, v_max, quadrature)."""

    def __init__(
        self,
        model: HamiltonianModel,
        grid: Grid,
        dt: float,
        v_max: float,
        quadrature: str = "left",
    ):
        if quadrature not in QUADRATURES:
            raise ConfigurationError(f"unknown quadrature {quadrature!r}")
        if dt <= 0:
            raise ConfigurationError("dt must be positive")
        if dt * model.lipschitz_u > 1.0 + 1e-12:
            raise ConfigurationError(
                f"dt violates dt*lambda_L <= 1: dt={dt:g}, lambda_L={model.lipschitz_u:g}"
            )
        self.model = model
        self.grid = grid
        self.dt = float(dt)
        self.v_max = float(v_max)
        self.quadrature = quadrature

        offsets = stencil_offsets(grid, v_max, dt)
        # lexicographic offset order fixes the candidate scan order
        order = np.lexsort(offsets.T[::-1])
        offsets = offsets[order]
        self.offsets = offsets
        self.n_offsets = offsets.shape[0]

        pts = grid.points()
        disp = offsets.astype(float) * grid.dx  # (n_off, dim)
        self.velocities = disp / dt
        kinetic = 0.5 * np.sum(self.velocities**2, axis=1)  # (n_off,)

        self.start_index = np.empty((self.n_offsets, grid.size), dtype=np.intp)
        self.base_cost = np.empty((self.n_offsets, grid.size))
        for k in range(self.n_offsets):
            self.start_index[k] = grid.shift_indices(offsets[k])
            if quadrature == "left":
                vterm = model.potential(pts)
            elif quadrature == "midpoint":
                vterm = model.potential(pts + 0.5 * disp[k])
            else:
                vterm = model.potential.segment_average(pts, np.broadcast_to(disp[k], pts.shape))
            # cost dt*L(y, ., v) without the u-coupling, indexed by start y
            self.base_cost[k] = dt * (kinetic[k] - vterm + model.action_shift)

    def step_cost(self, u_slice: np.ndarray) -> np.ndarray:
        """Start-point term W-independent of the offset: -dt * coupling(u(y))."""
        return -self.dt * self.model.coupling(u_slice)

    def apply(self, w: np.ndarray, u_slice: np.ndarray) -> np.ndarray:
        """One DP step of a single slice (shape (size,))."""
        a = w + self.step_cost(u_slice)
        out = np.take(a + self.base_cost[0], self.start_index[0])
        for k in range(1, self.n_offsets):
            np.minimum(out, np.take(a + self.base_cost[k], self.start_index[k]), out=out)
        return out

    def apply_with_argmin(self, w: np.ndarray, u_slice: np.ndarray):
        """One DP step returning (values, start indices of the minimizers).

        Ties are broken toward the smallest start grid index.
        """
        a = w + self.step_cost(u_slice)
        cand = np.empty((self.n_offsets, self.grid.size))
        for k in range(self.n_offsets):
            cand[k] = np.take(a + self.base_cost[k], self.start_index[k])
        vals = np.min(cand, axis=0)
        tied = cand <= vals[None, :]
        start = np.where(tied, self.start_index, self.grid.size)
        return vals, np.min(start, axis=0)

    def apply_table(self, w: np.ndarray, a_level: float) -> np.ndarray:
        """One DP step of an action table (rows = start points, frozen u)."""
        shift = self.step_cost(np.full(1, a_level))[0]
        a = w + shift
        out = np.take(a + self.base_cost[0][None, :], self.start_index[0], axis=1)
        for k in range(1, self.n_offsets):
            np.minimum(
                out,
                np.take(a + self.base_cost[k][None, :], self.start_index[k], axis=1),
                out=out,
            )
        return out


def min_plus_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a ⊗ b)[i,j] = min_y a[i,y] + b[y,j]; exact table composition."""
    n = a.shape[0]
    out = np.empty_like(a)
    for j in range(n):
        out[:, j] = np.min(a + b[:, j][None, :], axis=1)
    return out
