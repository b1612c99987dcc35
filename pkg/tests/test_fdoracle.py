import math

import numpy as np
import pytest

from weakkam.errors import ConfigurationError
from weakkam.fdoracle import LFConfig, lf_final, lf_solve, lf_step
from weakkam.models import HamiltonianModel, TrigPotential
from weakkam.semigroup import step_T
from weakkam.torus import Grid, GridField


def discounted_pendulum():
    return HamiltonianModel(
        "quadratic-discounted", lam=1.0, potential=TrigPotential(1, (((1,), 1.0),))
    )


def test_config_rejects_cfl_violation():
    g = Grid(1, 64)
    with pytest.raises(ConfigurationError, match="CFL"):
        LFConfig(g, alpha=2.0, dt_fd=g.dx)


def test_config_rejects_alpha_below_audited_bound():
    g = Grid(1, 64)
    with pytest.raises(ConfigurationError, match="alpha"):
        LFConfig(g, alpha=2.0, dt_fd=1e-4, audited_max_hp=3.0)


def test_step_rejects_large_dt_for_u_sensitivity():
    m = HamiltonianModel("quadratic-discounted", lam=300.0)
    g = Grid(1, 64)
    cfg = LFConfig(g, alpha=1.0, dt_fd=0.25 * g.dx)
    with pytest.raises(ConfigurationError, match="lambda_L"):
        lf_step(m, GridField(g, np.zeros(g.size)), cfg)


def test_step_is_monotone_on_lipschitz_data():
    # ordered inputs stay ordered as long as alpha dominates the |H_p|
    # actually reached by the one-sided slopes of the data
    m = discounted_pendulum()
    g = Grid(1, 128)
    cfg = LFConfig(g, 4.1, 0.99 * 0.5 * g.dx / 4.1, audited_max_hp=4.0)
    rng = np.random.default_rng(0)
    x = g.points()[:, 0]
    for _ in range(20):
        a = rng.uniform(-0.5, 0.5) * np.sin(2 * np.pi * (x + rng.uniform()))
        a += rng.uniform(-0.3, 0.3) * np.cos(4 * np.pi * x)
        c = rng.uniform(0, 0.3) * (1 + np.sin(2 * np.pi * (x + rng.uniform())))
        fa = lf_step(m, GridField(g, a), cfg)
        fb = lf_step(m, GridField(g, a + c), cfg)
        assert np.min(fb.values - fa.values) >= -1e-12


def test_flat_discounted_decay_matches_exponential():
    m = HamiltonianModel("quadratic-discounted", lam=1.0)
    g = Grid(1, 128)
    cfg = LFConfig(g, alpha=1.0, dt_fd=1e-4)
    phi = GridField(g, np.ones(g.size))
    u = lf_final(m, phi, 1.0, cfg)
    assert np.max(np.abs(u.values - np.exp(-1.0))) <= 1e-4


def test_solve_returns_slab_and_validates_horizon():
    m = discounted_pendulum()
    g = Grid(1, 64)
    cfg = LFConfig(g, 4.1, 1.0 / 2048, audited_max_hp=4.0)
    phi = GridField(g, np.zeros(g.size))
    slab = lf_solve(m, phi, 0.125, cfg)
    assert slab.n_steps == 256
    assert np.array_equal(slab.values[0], phi.values)
    with pytest.raises(ConfigurationError):
        lf_solve(m, phi, 0.1001, cfg)


def test_cross_check_against_variational_solver():
    # independent discretizations agree to first order on a smooth window
    m = discounted_pendulum()
    g = Grid(1, 256)
    phi = GridField(g, np.zeros(g.size))
    dt_fd = 1.0 / math.ceil(1.0 / (0.5 * g.dx / 4.1))
    cfg = LFConfig(g, 4.1, dt_fd, audited_max_hp=4.0)
    u_fd = lf_final(m, phi, 1.0, cfg)
    u_dp = step_T(m, phi, 1.0, 1.0 / 64, 4.0, tol=0.0, quadrature="exact")
    assert np.max(np.abs(u_fd.values - u_dp.values)) <= 0.05
