"""Gradient control law, leader variants, and frame-independence."""

import numpy as np
import pytest

from rigidflex.control import (
    LeaderSpec,
    balance_residuals,
    composite_potential,
    edge_states,
    gradient_control,
    leader_control,
    leader_spec_from_json,
    local_frame_control,
    potential_value,
)
from rigidflex.graph import tetrahedron_flex, triangle_flex
from rigidflex.potentials import QUADRATIC, RATIONAL

RNG = np.random.default_rng(42)


def random_positions(graph, scale=5.0):
    return RNG.uniform(-scale, scale, (graph.num_nodes, graph.dimension))


def numeric_gradient(p, graph, family, h=1e-7):
    p = p.reshape(-1).astype(float)
    grad = np.zeros_like(p)
    for k in range(p.size):
        pp, pm = p.copy(), p.copy()
        pp[k] += h
        pm[k] -= h
        grad[k] = (potential_value(pp, graph, family)
                   - potential_value(pm, graph, family)) / (2 * h)
    return grad


@pytest.mark.parametrize("graph", [triangle_flex(), tetrahedron_flex()])
@pytest.mark.parametrize("family", [QUADRATIC, RATIONAL])
def test_control_is_negative_gradient(graph, family):
    for _ in range(5):
        p = random_positions(graph)
        u = gradient_control(p, graph, family)
        np.testing.assert_allclose(u, -numeric_gradient(p, graph, family),
                                   rtol=1e-5, atol=1e-6)


def test_control_matches_per_agent_sum():
    g = triangle_flex()
    p = random_positions(g)
    st = edge_states(p, g, QUADRATIC)
    u = gradient_control(p, g, QUADRATIC).reshape(4, 2)
    # agent 3 touches edges (1,3), (2,3), (3,4)
    expected = -(st.g[1] * -st.z[1] + st.g[2] * -st.z[2] + st.g[3] * st.z[3])
    np.testing.assert_allclose(u[2], expected, atol=1e-12)


def test_translation_invariance():
    g = tetrahedron_flex()
    p = random_positions(g)
    shift = np.array([1.7, -2.3, 0.4])
    u0 = gradient_control(p, g, QUADRATIC)
    u1 = gradient_control(p + shift, g, QUADRATIC)
    np.testing.assert_allclose(u0, u1, atol=1e-12)


def test_rotation_equivariance():
    g = triangle_flex()
    p = random_positions(g)
    th = 0.83
    r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    u0 = gradient_control(p, g, QUADRATIC).reshape(4, 2)
    u1 = gradient_control(p @ r.T, g, QUADRATIC).reshape(4, 2)
    np.testing.assert_allclose(u1, u0 @ r.T, atol=1e-12)


def test_local_frame_control_equivalence():
    """Each agent may express measurements in its own rotated frame."""
    g = triangle_flex()
    p = random_positions(g)
    st = edge_states(p, g, QUADRATIC)
    u = gradient_control(p, g, QUADRATIC).reshape(4, 2)
    for agent in range(1, 5):
        th = RNG.uniform(0, 2 * np.pi)
        r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        offsets, gvals = [], []
        for k, (i, j) in enumerate(g.edges):
            if i == agent:
                offsets.append(r @ st.z[k])
                gvals.append(st.g[k])
            elif j == agent:
                offsets.append(r @ -st.z[k])
                gvals.append(st.g[k])
        local = local_frame_control(offsets, gvals)
        np.testing.assert_allclose(local, r @ u[agent - 1], atol=1e-12)


def test_balance_residuals_zero_at_desired_shape():
    from rigidflex.oracle import desired_equilibrium
    g = triangle_flex()
    p = desired_equilibrium(g)
    assert balance_residuals(p, g, QUADRATIC).max() < 1e-12


def test_coincident_edge_contributes_no_force():
    # rational g diverges at coincidence but the zero edge vector wins
    g = triangle_flex()
    p = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
    u = gradient_control(p, g, RATIONAL)
    assert np.all(np.isfinite(u))


def test_target_leader_input_value():
    spec = LeaderSpec(mode="target", k_f=5.0, p_t=np.array([10.0, 10.0]))
    v = spec.flex_input(0.0, np.array([0.0, 9.228]))
    np.testing.assert_allclose(v, [50.0, 3.86])


def test_windowed_leader_switches_off():
    spec = leader_spec_from_json(
        {"mode": "windowed", "t0": 1.0, "tf": 2.0,
         "v": [[1.0, 0.5, -0.5], [1.5, 1.0, 0.0]]}, 2)
    np.testing.assert_allclose(spec.flex_input(1.2, np.zeros(2)), [0.5, -0.5])
    np.testing.assert_allclose(spec.flex_input(1.7, np.zeros(2)), [1.0, 0.0])
    np.testing.assert_allclose(spec.flex_input(2.5, np.zeros(2)), [0.0, 0.0])


def test_leader_only_drives_flex_agent():
    g = triangle_flex()
    p = random_positions(g)
    spec = LeaderSpec(mode="target", k_f=5.0, p_t=np.array([10.0, 10.0]))
    u_plain = gradient_control(p, g, QUADRATIC)
    u_led = leader_control(p, 0.0, g, QUADRATIC, spec)
    np.testing.assert_allclose(u_led[:-2], u_plain[:-2], atol=1e-12)
    assert not np.allclose(u_led[-2:], u_plain[-2:])


def test_composite_potential_reduces_to_shape_potential():
    g = triangle_flex()
    p = random_positions(g)
    assert composite_potential(p, g, QUADRATIC, LeaderSpec()) == pytest.approx(
        potential_value(p, g, QUADRATIC))


def test_leader_mode_validation():
    with pytest.raises(ValueError):
        LeaderSpec(mode="target", k_f=0.0, p_t=np.zeros(2))
    with pytest.raises(ValueError):
        LeaderSpec(mode="windowed", v=None, t0=0.0, tf=1.0)
    with pytest.raises(ValueError):
        LeaderSpec(mode="orbit")
