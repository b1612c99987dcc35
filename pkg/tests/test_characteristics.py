import numpy as np
import pytest

from weakkam.characteristics import (
    CharacteristicState,
    Trajectory,
    dH_law_residual,
    flow,
    match_calibrated,
)
from weakkam.models import HamiltonianModel, TrigPotential
from weakkam.semigroup import extract_calibrated_curve, fixed_point
from weakkam.torus import Grid, GridField


def discounted_pendulum(lam=1.0):
    return HamiltonianModel(
        "quadratic-discounted", lam=lam, potential=TrigPotential(1, (((1,), 1.0),))
    )


def test_free_particle_flow_is_exact():
    m = HamiltonianModel("quadratic-mechanical", dim=1)
    traj = flow(m, CharacteristicState(x=[0.1], u=0.0, p=[0.7]), 2.0, 1e-2)
    xe = (0.1 + 0.7 * traj.times) % 1.0
    ue = 0.5 * 0.7**2 * traj.times
    assert np.max(np.abs(traj.xs[:, 0, 0] - xe)) <= 1e-12
    assert np.max(np.abs(traj.us[:, 0] - ue)) <= 1e-12
    assert np.max(np.abs(traj.ps[:, 0, 0] - 0.7)) <= 1e-14


def test_discounted_momentum_decays_exponentially():
    # flat potential: p' = -H_u p = -lam p, so p(t) = p0 e^{-lam t}
    m = HamiltonianModel("quadratic-discounted", lam=1.0)
    traj = flow(m, CharacteristicState(x=[0.2], u=0.0, p=[1.0]), 2.0, 1e-3)
    assert np.max(np.abs(traj.ps[:, 0, 0] - np.exp(-traj.times))) <= 1e-8


def test_integrator_is_fourth_order():
    m = discounted_pendulum()
    s0 = CharacteristicState(x=[0.3], u=0.1, p=[0.5])
    ref = flow(m, s0, 1.0, 1.0 / 4096)
    errs = []
    for dtd in (32, 64):
        t = flow(m, s0, 1.0, 1.0 / dtd)
        errs.append(
            abs(t.us[-1, 0] - ref.us[-1, 0]) + abs(t.ps[-1, 0, 0] - ref.ps[-1, 0, 0])
        )
    assert errs[0] / errs[1] >= 14.0


def test_dH_evolution_law():
    # dH/ds = -H_u H; for the discounted family H(t) = H(0) e^{-lam t}
    m = discounted_pendulum()
    traj = flow(m, CharacteristicState(x=[0.25], u=0.0, p=[0.9]), 2.0, 1e-3)
    stats = dH_law_residual(m, traj)
    assert stats.rms_residual <= 1e-6
    assert stats.max_residual <= 1e-6
    h0 = traj.h_values[0, 0]
    assert np.max(np.abs(traj.h_values[:, 0] - h0 * np.exp(-traj.times))) <= 1e-6


def test_zero_energy_level_is_invariant():
    # start on {H = 0}: x = 1/4 kills the potential, u = -p^2/2
    m = discounted_pendulum()
    traj = flow(m, CharacteristicState(x=[0.25], u=-0.18, p=[0.6]), 2.0, 1e-3)
    assert np.max(np.abs(traj.h_values)) <= 1e-10


def test_batched_flow_stays_finite_over_long_horizon():
    m = discounted_pendulum()
    rng = np.random.default_rng(7)
    b = 64
    x = rng.uniform(0, 1, (b, 1))
    u = rng.uniform(-1, 1, b)
    p = rng.uniform(-5, 5, (b, 1))
    traj = flow(m, (x, u, p), 100.0, 1e-2)
    assert traj.batch == b
    assert np.all(np.isfinite(traj.us))
    assert np.all(np.isfinite(traj.ps))
    # dissipation contracts the momenta toward the rest set
    assert np.max(np.abs(traj.ps[-1])) <= 1e-8


def test_flow_rejects_bad_step():
    m = discounted_pendulum()
    with pytest.raises(ValueError):
        flow(m, CharacteristicState(x=[0.1], u=0.0, p=[0.1]), 1.0, 0.0)


def test_match_calibrated_chain_within_grid_cells():
    m = discounted_pendulum()
    sup = []
    for n, dtd in ((256, 64), (512, 128)):
        g = Grid(1, n)
        phi = GridField(g, np.zeros(n))
        u, _ = fixed_point(m, phi, 0.5, 1.0 / dtd, 4.0, tol=0.0, quadrature="exact")
        curve = extract_calibrated_curve(
            m, u, x_end=round(0.55 * n), v_max=4.0, quadrature="exact"
        )
        report = match_calibrated(m, curve, u, dt_ode=1.0 / (4 * dtd))
        assert report.sup_distance <= 5 * g.dx
        sup.append(report.sup_distance)
    # gap shrinks roughly linearly under joint refinement
    assert sup[1] <= 0.6 * sup[0]


def test_trajectory_csv_header_and_state_access():
    m = discounted_pendulum()
    traj = flow(m, CharacteristicState(x=[0.3], u=0.1, p=[0.5]), 0.1, 0.05)
    lines = traj.to_csv().strip().split("\n")
    assert lines[0] == "t,x,u,p,H"
    assert len(lines) == 1 + traj.times.size
    assert "np." not in traj.to_csv()
    s = traj.state(1)
    assert s.t == pytest.approx(0.05)
