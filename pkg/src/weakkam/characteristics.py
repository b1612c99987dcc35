"""Characteristic flow of the contact system

    x' = H_p,   p' = -H_x - H_u p,   u' = <H_p, p> - H

integrated with the classical fixed-step 4th-order one-step rule, plus the
diagnostics tying the flow back to the dynamic-programming chains: the
evolution law dH/ds = -H_u * H along trajectories and the match between a
backtracked calibrated curve and the trajectory launched from its state.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .models import HamiltonianModel, eval_H, grad_H
from .semigroup import CalibratedCurve
from .torus import SpaceTimeField, csv_float, periodic_delta, periodic_distance, wrap


@dataclass
class CharacteristicState:
    x: np.ndarray  # position in [0,1)^d
    u: float
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = wrap(np.asarray(self.x, dtype=float).reshape(-1))
        self.p = np.asarray(self.p, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p)) and np.isfinite(self.u)):
            raise ValueError("non-finite characteristic state")


@dataclass
class Trajectory:
    dt_ode: float
    times: np.ndarray
    xs: np.ndarray  # (n_states, batch, dim)
    us: np.ndarray  # (n_states, batch)
    ps: np.ndarray  # (n_states, batch, dim)
    h_values: np.ndarray  # H along the trajectory, (n_states, batch)

    @property
    def batch(self) -> int:
        return self.us.shape[1]

    def state(self, k: int, b: int = 0) -> CharacteristicState:
        return CharacteristicState(
            x=self.xs[k, b], u=float(self.us[k, b]), p=self.ps[k, b], t=float(self.times[k])
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        d = self.xs.shape[2]
        xcols = ",".join(f"x{i+1}" for i in range(d)) if d > 1 else "x"
        pcols = ",".join(f"p{i+1}" for i in range(d)) if d > 1 else "p"
        buf.write(f"t,{xcols},u,{pcols},H\n")
        for k in range(self.times.size):
            for b in range(self.batch):
                xs = ",".join(csv_float(v) for v in self.xs[k, b])
                ps = ",".join(csv_float(v) for v in self.ps[k, b])
                buf.write(
                    f"{csv_float(self.times[k])},{xs},{csv_float(self.us[k, b])},{ps},"
                    f"{csv_float(self.h_values[k, b])}\n"
                )
        return buf.getvalue()


def _rhs(model, x, u, p):
    """Vector field of the contact system; x shape (b,d), u (b,), p (b,d)."""
    hx, hu, hp = grad_H(model, x, u, p)
    hx = np.atleast_2d(hx)
    hp = np.atleast_2d(hp)
    hu = np.atleast_1d(hu)
    h = np.atleast_1d(eval_H(model, x, u, p))
    dx = hp
    dp = -hx - hu[:, None] * p
    du = np.sum(hp * p, axis=1) - h
    return dx, du, dp


def flow(
    model: HamiltonianModel,
    s0,
    t: float,
    dt_ode: float,
) -> Trajectory:
    """Integrate the characteristic system from one state or a batch.

    ``s0`` may be a CharacteristicState or a tuple of arrays (x, u, p) with
    a leading batch axis.  Fixed-step integration keeps runs reproducible;
    a non-finite state aborts with the last good state attached.
    """
    if dt_ode <= 0:
        raise ValueError("dt_ode must be positive")
    if isinstance(s0, CharacteristicState):
        x = s0.x[None, :].copy()
        u = np.array([s0.u])
        p = s0.p[None, :].copy()
        t0 = s0.t
    else:
        x, u, p = s0
        x = np.atleast_2d(np.asarray(x, dtype=float)).copy()
        u = np.atleast_1d(np.asarray(u, dtype=float)).copy()
        p = np.atleast_2d(np.asarray(p, dtype=float)).copy()
        t0 = 0.0
    n = int(round(t / dt_ode))
    times = t0 + dt_ode * np.arange(n + 1)
    xs = np.empty((n + 1,) + x.shape)
    us = np.empty((n + 1,) + u.shape)
    ps = np.empty((n + 1,) + p.shape)
    hs = np.empty((n + 1,) + u.shape)
    xs[0], us[0], ps[0] = wrap(x), u, p
    hs[0] = np.atleast_1d(eval_H(model, x, u, p))
    h = dt_ode
    for k in range(n):
        k1 = _rhs(model, x, u, p)
        k2 = _rhs(model, x + 0.5 * h * k1[0], u + 0.5 * h * k1[1], p + 0.5 * h * k1[2])
        k3 = _rhs(model, x + 0.5 * h * k2[0], u + 0.5 * h * k2[1], p + 0.5 * h * k2[2])
        k4 = _rhs(model, x + h * k3[0], u + h * k3[1], p + h * k3[2])
        x = x + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        u = u + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        p = p + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
            raise NumericError(
                f"characteristic flow produced a non-finite state at step {k + 1}",
                last_iterate=(xs[k], us[k], ps[k]),
            )
        x = wrap(x)
        xs[k + 1], us[k + 1], ps[k + 1] = x, u, p
        hs[k + 1] = np.atleast_1d(eval_H(model, x, u, p))
    return Trajectory(dt_ode=dt_ode, times=times, xs=xs, us=us, ps=ps, h_values=hs)


@dataclass
class DHLawStats:
    max_residual: float
    rms_residual: float


def dH_law_residual(model: HamiltonianModel, traj: Trajectory) -> DHLawStats:
    """Centered dH/ds along the trajectory against -H_u * H."""
    if traj.times.size < 3:
        raise ValueError("trajectory too short for a centered difference")
    dh = (traj.h_values[2:] - traj.h_values[:-2]) / (2.0 * traj.dt_ode)
    b, d = traj.us.shape[1], traj.xs.shape[2]
    inner = slice(1, -1)
    x = traj.xs[inner].reshape(-1, d)
    u = traj.us[inner].reshape(-1)
    p = traj.ps[inner].reshape(-1, d)
    _, hu, _ = grad_H(model, x, u, p)
    hu = np.atleast_1d(hu).reshape(-1, b)
    law = -hu * traj.h_values[inner]
    res = dh - law
    return DHLawStats(
        max_residual=float(np.max(np.abs(res))),
        rms_residual=float(np.sqrt(np.mean(res**2))),
    )


@dataclass
class MatchReport:
    sup_distance: float
    sup_u_gap: float
    launch_index: int
    n_compared: int


def match_calibrated(
    model: HamiltonianModel,
    curve: CalibratedCurve,
    spacetime: SpaceTimeField,
    dt_ode: float | None = None,
    p_source: str = "velocity",
    launch_fraction: float = 0.0,
    sample_offset: float = 0.5,
) -> MatchReport:
    """Launch the flow from an interior state of a calibrated chain and
    report the sup distance to the chain over the shared window.

    The momentum at the launch point comes either from the chain's
    forward-difference velocity ("velocity", the conjugate momentum
    dL/dv at the discrete velocity) or from the spatial gradient of the
    field slice ("gradient"); endpoints of the chain are excluded, so the
    default launch is the first interior slice.

    The chain is the explicit polygon of the characteristic, which lags
    the flow by half a step, so chain slice k is compared against the ODE
    state at time (k + sample_offset)*dt; offset 0.5 cancels the leading
    O(dt) discrepancy.
    """
    grid = spacetime.grid
    n = curve.indices.size - 1
    k0 = max(1, int(round(launch_fraction * n)))
    if k0 >= n - 1:
        raise ValueError("chain too short to match")
    x0 = curve.points[k0]
    u0 = float(curve.u_values[k0])
    if p_source == "velocity":
        p0 = curve.velocities[k0]
    elif p_source == "gradient":
        sl = spacetime.values[k0].reshape((grid.n,) * grid.dim)
        idx = curve.indices[k0]
        if grid.dim == 1:
            j = int(idx)
            p0 = np.array([(sl[(j + 1) % grid.n] - sl[(j - 1) % grid.n]) / (2 * grid.dx)])
        else:
            j, k = int(idx) // grid.n, int(idx) % grid.n
            p0 = np.array(
                [
                    (sl[(j + 1) % grid.n, k] - sl[(j - 1) % grid.n, k]) / (2 * grid.dx),
                    (sl[j, (k + 1) % grid.n] - sl[j, (k - 1) % grid.n]) / (2 * grid.dx),
                ]
            )
    else:
        raise ValueError(f"unknown p_source {p_source!r}")
    # the quadratic catalog has p = dL/dv = v, so either source is a momentum
    h = dt_ode if dt_ode is not None else spacetime.dt
    sub = max(1, int(round(spacetime.dt / h)))
    h = spacetime.dt / sub
    horizon = (n - k0) * spacetime.dt  # one extra step covers the offset
    traj = flow(model, CharacteristicState(x=x0, u=u0, p=p0, t=k0 * spacetime.dt), horizon, h)
    off = int(round(sample_offset * sub))
    sup_d, sup_u = 0.0, 0.0
    for m, k in enumerate(range(k0, n)):
        xi = traj.xs[m * sub + off, 0]
        ui = float(traj.us[m * sub + off, 0])
        sup_d = max(sup_d, float(periodic_distance(xi, curve.points[k])))
        sup_u = max(sup_u, abs(ui - float(curve.u_values[k])))
    return MatchReport(sup_distance=sup_d, sup_u_gap=sup_u, launch_index=k0, n_compared=n - k0)
