"""Closed-loop integration: events, equilibrium detection, monotonicity."""

import numpy as np
import pytest

from rigidflex.control import LeaderSpec, potential_value
from rigidflex.graph import tetrahedron_flex, triangle_flex
from rigidflex.integrator import (
    IntegrationError,
    PerturbationEvent,
    apply_perturbation,
    detect_equilibrium,
    integrate,
    random_perturbation,
)
from rigidflex.oracle import desired_equilibrium
from rigidflex.potentials import QUADRATIC


def test_desired_start_is_constant_trajectory():
    g = triangle_flex()
    p0 = desired_equilibrium(g)
    traj = integrate(p0, g, QUADRATIC, t_end=1.0, dt=1e-3)
    np.testing.assert_allclose(traj.states[-1], p0.reshape(-1), atol=1e-12)
    assert np.abs(traj.edge_errors).max() < 1e-12


def test_convergence_from_generic_start():
    g = triangle_flex()
    p0 = np.array([[5.0, 0.5], [-4.0, 1.0], [0.3, -3.0], [1.0, 4.0]])
    traj = integrate(p0, g, QUADRATIC, t_end=10.0, dt=1e-3)
    assert np.abs(traj.edge_errors[-1]).max() < 1e-8
    assert any(kind == "equilibrium_detected" for _, kind in traj.events)


def test_potential_decreases_along_flow():
    g = tetrahedron_flex()
    rng = np.random.default_rng(1)
    p0 = rng.uniform(-4, 4, (5, 3))
    traj = integrate(p0, g, QUADRATIC, t_end=5.0, dt=1e-3)
    v = [potential_value(s, g, QUADRATIC) for s in traj.states]
    assert all(b <= a + 1e-10 for a, b in zip(v, v[1:]))
    assert traj.max_lyapunov_increase <= 1e-10


def test_perturbation_applied_exactly_on_time():
    g = triangle_flex()
    p0 = desired_equilibrium(g)
    ev = PerturbationEvent(time=0.2345, agent=4, displacement=np.array([0.1, 0.0]))
    traj = integrate(p0, g, QUADRATIC, t_end=1.0, dt=1e-3, events=[ev])
    times = [t for t, kind in traj.events if kind == "perturbation_applied"]
    assert times == [0.2345]
    # the state jump is recorded at the event time
    idx = np.where(np.isclose(traj.times, 0.2345))[0]
    assert len(idx) >= 1


def test_reconvergence_after_perturbation():
    g = triangle_flex()
    p0 = desired_equilibrium(g)
    ev = random_perturbation(time=0.1, agent=2, dimension=2, magnitude=0.5, seed=9)
    traj = integrate(p0, g, QUADRATIC, t_end=10.0, dt=1e-3, events=[ev])
    assert np.abs(traj.edge_errors[-1]).max() < 1e-8


def test_random_perturbation_is_seeded_and_normalized():
    a = random_perturbation(1.0, 3, 3, 0.01, seed=5)
    b = random_perturbation(1.0, 3, 3, 0.01, seed=5)
    np.testing.assert_array_equal(a.displacement, b.displacement)
    assert np.linalg.norm(a.displacement) == pytest.approx(0.01)


def test_apply_perturbation_bounds_checked():
    g = triangle_flex()
    p = desired_equilibrium(g)
    with pytest.raises(ValueError):
        apply_perturbation(p, PerturbationEvent(1.0, 9, np.zeros(2)), g)
    with pytest.raises(ValueError):
        apply_perturbation(p, PerturbationEvent(1.0, 1, np.zeros(3)), g)


def test_detect_equilibrium_thresholds():
    g = triangle_flex()
    p = desired_equilibrium(g)
    assert detect_equilibrium(p, g, QUADRATIC).at_equilibrium
    p2 = p.copy()
    p2[0] += 0.5
    chk = detect_equilibrium(p2, g, QUADRATIC)
    assert not chk.at_equilibrium
    assert chk.residual > 1.0


def test_event_outside_horizon_rejected():
    g = triangle_flex()
    ev = PerturbationEvent(time=5.0, agent=1, displacement=np.zeros(2))
    with pytest.raises(ValueError):
        integrate(desired_equilibrium(g), g, QUADRATIC, t_end=1.0, events=[ev])


def test_adaptive_mode_matches_fixed_step():
    g = triangle_flex()
    p0 = np.array([[5.0, 0.5], [-4.0, 1.0], [0.3, -3.0], [1.0, 4.0]])
    fixed = integrate(p0, g, QUADRATIC, t_end=2.0, dt=1e-3)
    adaptive = integrate(p0, g, QUADRATIC, t_end=2.0, dt=1e-3, adaptive=True,
                         rtol=1e-10)
    np.testing.assert_allclose(adaptive.final_state, fixed.final_state,
                               rtol=1e-6, atol=1e-6)


def test_target_leader_run_reaches_target():
    g = triangle_flex()
    p0 = desired_equilibrium(g)
    spec = LeaderSpec(mode="target", k_f=5.0, p_t=np.array([6.0, 6.0]))
    traj = integrate(p0, g, QUADRATIC, t_end=10.0, dt=1e-3, leader=spec)
    pos = traj.final_state.reshape(4, 2)
    assert np.linalg.norm(pos[-1] - spec.p_t) < 1e-3
    assert any(kind == "target_reached" for _, kind in traj.events)
    assert traj.max_lyapunov_increase <= 1e-10


def test_trajectory_csv_round_trip(tmp_path):
    g = triangle_flex()
    traj = integrate(desired_equilibrium(g), g, QUADRATIC, t_end=0.05, dt=1e-3)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "x1", "y1"]
    assert header[-1] == "gradnorm"
    assert "e_34" in header
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == len(header)


def test_nonpositive_horizon_rejected():
    g = triangle_flex()
    with pytest.raises(ValueError):
        integrate(desired_equilibrium(g), g, QUADRATIC, t_end=0.0)
