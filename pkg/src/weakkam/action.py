"""Minimal actions between grid points, the Peierls barrier and the
critical value of the frozen-u Lagrangian.

The minimal action table h_t(x_i, x_j) is computed by dynamic programming
over time slices with straight-segment costs; tables for doubled horizons
are obtained by exact min-plus composition, which makes the growth-rate
estimate of the critical value cheap at large horizons.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .kernels import StepKernel, min_plus_product
from .models import HamiltonianModel
from .torus import Grid, csv_float


@dataclass
class ActionTable:
    """h_t(x_i, x_j) for a frozen u-level; row = start, column = end."""

    model: HamiltonianModel
    a: float
    t: float
    dt: float
    grid: Grid
    v_max: float
    values: np.ndarray
    quadrature: str = "left"

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values).copy()

    def compose(self, other: "ActionTable") -> "ActionTable":
        """Exact composition h_{t+t'}(x,z) = min_y h_t(x,y) + h_{t'}(y,z)."""
        if other.grid is not self.grid and other.grid != self.grid:
            raise ConfigurationError("cannot compose tables on different grids")
        return ActionTable(
            model=self.model,
            a=self.a,
            t=self.t + other.t,
            dt=self.dt,
            grid=self.grid,
            v_max=self.v_max,
            values=min_plus_product(self.values, other.values),
            quadrature=self.quadrature,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        pts = self.grid.points()
        if self.grid.dim == 1:
            buf.write("i,j,x_i,x_j,h\n")
            for i in range(self.grid.size):
                for j in range(self.grid.size):
                    buf.write(
                        f"{i},{j},{csv_float(pts[i, 0])},{csv_float(pts[j, 0])},"
                        f"{csv_float(self.values[i, j])}\n"
                    )
        else:
            buf.write("i,j,xi1,xi2,xj1,xj2,h\n")
            for i in range(self.grid.size):
                for j in range(self.grid.size):
                    buf.write(
                        f"{i},{j},{csv_float(pts[i, 0])},{csv_float(pts[i, 1])},"
                        f"{csv_float(pts[j, 0])},{csv_float(pts[j, 1])},"
                        f"{csv_float(self.values[i, j])}\n"
                    )
        return buf.getvalue()


@dataclass
class CriticalValueResult:
    a: float
    c: float
    diagnostics: list = field(default_factory=list)  # (T, raw estimate)
    converged: bool = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("T,estimate\n")
        for T, est in self.diagnostics:
            buf.write(f"{csv_float(T)},{csv_float(est)}\n")
        return buf.getvalue()


def discretization_slack(model: HamiltonianModel, grid: Grid, dt: float, v_max: float) -> float:
    """Slack K_L*(dx + dt) for discrete action identities.

    K_L combines the potential's gradient bound with the velocity scale of
    the window, the local Lipschitz data of the segment costs.
    """
    k_l = model.potential.gradient_bound() + v_max
    return k_l * (grid.dx + dt)


def min_action(
    model: HamiltonianModel,
    a: float,
    t: float,
    grid: Grid,
    dt: float,
    v_max: float,
    quadrature: str = "left",
) -> ActionTable:
    """DP table of minimal actions over horizon t at frozen u-level a."""
    if not (t >= dt > 0):
        raise ConfigurationError("need t >= dt > 0")
    n_steps = int(round(t / dt))
    if abs(n_steps * dt - t) > 1e-9 * max(1.0, t):
        raise ConfigurationError(f"horizon t={t:g} is not a multiple of dt={dt:g}")
    kern = StepKernel(model, grid, dt, v_max, quadrature)
    w = np.full((grid.size, grid.size), np.inf)
    np.fill_diagonal(w, 0.0)
    for _ in range(n_steps):
        w = kern.apply_table(w, a)
    return ActionTable(
        model=model, a=a, t=t, dt=dt, grid=grid, v_max=v_max, values=w, quadrature=quadrature
    )


def _doubling_tables(base: ActionTable, t_max: float):
    """Yield tables at horizons t0, 2*t0, 4*t0, ... up to t_max."""
    table = base
    yield table
    while table.t * 2.0 <= t_max * (1.0 + 1e-9):
        table = table.compose(table)
        yield table


def critical_value(
    model: HamiltonianModel,
    a: float,
    grid: Grid,
    dt: float,
    v_max: float,
    t_max: float,
    tol: float = 1e-6,
    t0: float = 1.0,
    quadrature: str = "left",
) -> CriticalValueResult:
    """Estimate c = -lim min_x h_T(x,x)/T over geometrically increasing T.

    The raw sequence behaves like c - beta/T once the transient has passed,
    so the Richardson pair 2*c(2T) - c(T) removes the leading term; the raw
    estimates are reported as diagnostics.
    """
    if t_max < 4:
        raise ConfigurationError("T_max must be >= 4")
    base = min_action(model, a, t0, grid, dt, v_max, quadrature)
    diagnostics = []
    raw = []
    prev_extrap = None
    extrap = None
    converged = False
    for table in _doubling_tables(base, t_max):
        est = -float(np.min(table.diagonal())) / table.t
        diagnostics.append((table.t, est))
        raw.append(est)
        if len(raw) >= 2:
            extrap = 2.0 * raw[-1] - raw[-2]
            if prev_extrap is not None and abs(extrap - prev_extrap) < tol:
                converged = True
                break
            prev_extrap = extrap
    c = extrap if extrap is not None else raw[-1]
    return CriticalValueResult(a=a, c=float(c), diagnostics=diagnostics, converged=converged)


def peierls_barrier(
    model: HamiltonianModel,
    a: float,
    grid: Grid,
    dt: float,
    v_max: float,
    c: float,
    t_list,
    quadrature: str = "left",
):
    """Barrier iterates h_T(x,y) + c*T and their pointwise tail minimum.

    Returns (liminf_estimate, report).  The report carries the per-horizon
    matrices, the sup bound C_t0 = max_T |h_T + c*T| and a non-divergence
    flag checked across the supplied horizons.
    """
    t_list = sorted(float(t) for t in t_list)
    if not t_list:
        raise ConfigurationError("T_list must be non-empty")
    barriers = {}
    table = None
    prev_t = 0.0
    for t in t_list:
        gap = t - prev_t
        if gap <= 0:
            raise ConfigurationError("T_list must be strictly increasing")
        piece = min_action(model, a, gap, grid, dt, v_max, quadrature)
        table = piece if table is None else table.compose(piece)
        barriers[t] = table.values + c * t
        prev_t = t
    tail = t_list[len(t_list) // 2 :]
    liminf = np.min(np.stack([barriers[t] for t in tail]), axis=0)
    c_t0 = max(float(np.max(np.abs(barriers[t]))) for t in t_list)
    sup_seq = [float(np.max(np.abs(barriers[t]))) for t in t_list]
    report = {
        "T_list": t_list,
        "barriers": barriers,
        "C_t0": c_t0,
        "sup_sequence": sup_seq,
        "bounded": c_t0 < np.inf,
    }
    return liminf, report


def normalize(model: HamiltonianModel, c: float) -> HamiltonianModel:
    """Replace H by H - c (L by L + c)."""
    return model.normalized(c)
