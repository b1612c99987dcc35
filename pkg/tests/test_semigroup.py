import numpy as np
import pytest

from weakkam.errors import ConfigurationError, NumericError
from weakkam.models import HamiltonianModel, TrigPotential
from weakkam.semigroup import (
    check_properties,
    converge,
    extract_calibrated_curve,
    fixed_point,
    semigroup_defect,
    step_T,
    subsolution_gap,
    weak_kam_residual,
)
from weakkam.torus import Grid, GridField


def pendulum_normalized():
    m = HamiltonianModel(
        "quadratic-mechanical", potential=TrigPotential(1, (((1,), 1.0),))
    )
    return m.normalized(1.0)


def discounted_pendulum(lam=1.0):
    return HamiltonianModel(
        "quadratic-discounted", lam=lam, potential=TrigPotential(1, (((1,), 1.0),))
    )


def test_u_independent_model_is_single_pass():
    m = HamiltonianModel("quadratic-mechanical", dim=1)
    g = Grid(1, 32)
    phi = GridField(g, np.cos(2 * np.pi * g.points()[:, 0]))
    u, report = fixed_point(m, phi, 0.5, 1.0 / 16, 2.0, tol=0.0)
    assert report.iterations == 1
    assert report.residual_history == [0.0]
    assert u.n_steps == 8
    assert np.array_equal(u.values[0], phi.values)


def test_fixed_point_bitwise_stationary_within_step_count():
    m = discounted_pendulum()
    g = Grid(1, 128)
    phi = GridField(g, np.zeros(g.size))
    n_steps = 32
    u, report = fixed_point(m, phi, 1.0, 1.0 / n_steps, 4.0, tol=0.0)
    assert report.iterations <= n_steps
    assert report.residual_history[-1] == 0.0
    # certificate: observed gaps below twice the factorial bound
    for gap, bound in zip(report.residual_history, report.contraction_bound):
        assert gap <= 2.0 * bound + 1e-15


def test_fixed_point_raises_when_budget_too_small():
    m = discounted_pendulum()
    g = Grid(1, 64)
    phi = GridField(g, np.zeros(g.size))
    with pytest.raises(NumericError):
        fixed_point(m, phi, 1.0, 1.0 / 32, 4.0, tol=0.0, max_iter=2)


def test_fixed_point_horizon_validation():
    m = discounted_pendulum()
    g = Grid(1, 32)
    phi = GridField(g, np.zeros(g.size))
    with pytest.raises(ConfigurationError):
        fixed_point(m, phi, 0.3, 0.25, 4.0)
    with pytest.raises(ConfigurationError):
        fixed_point(m, phi, 1.0, 0.25, 4.0, tol=-1.0)


def test_discounted_constant_datum_decays_geometrically():
    # flat potential, constant datum: each step multiplies by (1 - lam*dt),
    # matching e^{-lam t} to first order in dt
    m = HamiltonianModel("quadratic-discounted", lam=1.0)
    g = Grid(1, 64)
    phi = GridField(g, np.ones(g.size))
    dt = 1.0 / 64
    u = step_T(m, phi, 1.0, dt, 2.0, tol=0.0)
    assert np.max(np.abs(u.values - (1 - dt) ** 64)) <= 1e-14
    assert np.max(np.abs(u.values - np.exp(-1.0))) <= 5e-3


def test_monotonicity_and_nonexpansiveness_are_exact():
    m = discounted_pendulum()
    g = Grid(1, 64)
    rng = np.random.default_rng(3)
    x = g.points()[:, 0]
    phi = GridField(g, 0.3 * np.sin(2 * np.pi * x) + rng.uniform(-0.1, 0.1, g.size))
    psi = GridField(g, 0.2 * np.cos(2 * np.pi * x) + rng.uniform(-0.1, 0.1, g.size))
    report = check_properties(m, phi, psi, [0.5, 1.0], 1.0 / 16, 4.0, tol=0.0)
    assert report.all_within(0.0)
    for e in report.entries:
        assert e["monotonicity_gap"] == 0.0
        assert e["nonexpansive_gap"] == 0.0
    assert np.isfinite(report.uniform_bound)
    assert report.equi_lipschitz > 0.0


def test_semigroup_law_exact_on_discrete_objects():
    m = discounted_pendulum()
    g = Grid(1, 64)
    phi = GridField(g, np.zeros(g.size))
    assert semigroup_defect(m, phi, 0.5, 0.5, 1.0 / 32, 4.0, tol=0.0) == 0.0
    assert semigroup_defect(m, phi, 0.25, 0.75, 1.0 / 32, 4.0, tol=0.0) == 0.0


def test_converge_reaches_pendulum_weak_kam_solution():
    # the normalized pendulum has the closed-form fixed point
    # u(x) = (2/pi)(1 - cos(pi * dist(x, 0))) up to an additive constant
    m = pendulum_normalized()
    g = Grid(1, 256)
    phi = GridField(g, np.zeros(g.size))
    report = converge(
        m, phi, 1.0 / 16, 4.0, tol=0.0, t_checkpoints=(20.0,),
        stop_eps=1e-9, quadrature="exact",
    )
    assert report.converged
    assert report.tail_nonincreasing
    x = g.points()[:, 0]
    exact = (2 / np.pi) * (1 - np.cos(np.pi * np.minimum(x, 1 - x)))
    num = report.u_inf.values - report.u_inf.values[0]
    assert np.max(np.abs(num - exact)) <= 5e-3
    # one kink at the cut point x = 1/2, small residual elsewhere
    assert report.residual.kink_count <= 3
    assert report.residual.max_abs_smooth <= 5e-2


def test_residual_zero_for_flat_discounted_solution():
    # H = p^2/2 + lam*u + V0 has the stationary solution u = -V0/lam
    m = HamiltonianModel(
        "quadratic-discounted", lam=2.0, potential=TrigPotential(1, (((0,), 0.7),))
    )
    g = Grid(1, 64)
    u = GridField(g, np.full(g.size, -0.35))
    stats = weak_kam_residual(m, u)
    assert stats.kink_count == 0
    assert stats.max_abs_smooth <= 1e-14
    assert stats.rms_smooth <= 1e-14


def test_converged_field_is_a_subsolution_along_test_curves():
    m = pendulum_normalized()
    g = Grid(1, 256)
    phi = GridField(g, np.zeros(g.size))
    report = converge(
        m, phi, 1.0 / 16, 4.0, tol=0.0, t_checkpoints=(20.0,),
        stop_eps=1e-9, quadrature="exact",
    )
    gap = subsolution_gap(m, report.u_inf, np.random.default_rng(0), n_curves=50)
    assert gap <= 1e-9


def test_calibrated_curve_defect_is_roundoff():
    m = discounted_pendulum()
    g = Grid(1, 128)
    phi = GridField(g, np.zeros(g.size))
    u, _ = fixed_point(m, phi, 1.0, 1.0 / 32, 4.0, tol=0.0)
    curve = extract_calibrated_curve(m, u, x_end=int(0.55 * g.size), v_max=4.0)
    assert curve.max_defect() <= 1e-12
    assert curve.indices.size == u.n_steps + 1
    assert curve.velocities.shape == (u.n_steps, 1)
    assert np.all(np.abs(curve.velocities) <= 4.0 + 1e-12)


def test_calibrated_curve_requires_fixed_point():
    m = discounted_pendulum()
    g = Grid(1, 64)
    phi = GridField(g, np.zeros(g.size))
    from weakkam.semigroup import _constant_extension

    not_fixed = _constant_extension(phi, 8, 1.0 / 16)
    with pytest.raises(ConfigurationError, match="not a fixed point"):
        extract_calibrated_curve(m, not_fixed, x_end=5, v_max=4.0)


def test_report_csv_headers():
    m = discounted_pendulum()
    g = Grid(1, 32)
    phi = GridField(g, np.zeros(g.size))
    _, fp_report = fixed_point(m, phi, 0.5, 1.0 / 16, 4.0, tol=0.0)
    assert fp_report.to_csv().startswith("iter,gap,bound\n")
    conv = converge(m, phi, 1.0 / 16, 4.0, tol=0.0, t_checkpoints=(2.0,), stop_eps=1e-8)
    lines = conv.to_csv().strip().split("\n")
    assert lines[0] == "t,increment"
    assert "np." not in conv.to_csv()
    psi = GridField(g, np.full(g.size, 0.1))
    props = check_properties(m, phi, psi, [0.5], 1.0 / 16, 4.0, tol=0.0)
    assert props.to_csv().startswith("t,monotonicity_gap,nonexpansive_gap,sup_norm,lipschitz\n")
