"""Hessian assembly, classification, witnesses, and sign-table verification."""

import itertools

import numpy as np
import pytest

from rigidflex.control import gradient_control
from rigidflex.graph import tetrahedron_flex, triangle_flex
from rigidflex.oracle import (
    build_catalog,
    desired_equilibrium,
    find_collinear_equilibrium,
    flex_coincident_equilibrium,
)
from rigidflex.potentials import QUADRATIC, RATIONAL
from rigidflex.stability import (
    WitnessNotFoundError,
    alignment_rotation,
    analyze,
    assemble_hessian,
    axis_sort_permutation,
    classify,
    coordinate_blocks,
    instability_witness,
    psd_check,
    verify_angle_inequalities,
    verify_sign_properties,
)

RNG = np.random.default_rng(7)


def fd_jacobian(p, graph, family, h=1e-6):
    """Central finite differences of the negative control field."""
    p = np.asarray(p, dtype=float).reshape(-1)
    n = p.size
    jac = np.zeros((n, n))
    for k in range(n):
        pp, pm = p.copy(), p.copy()
        pp[k] += h
        pm[k] -= h
        jac[:, k] = (-gradient_control(pp, graph, family)
                     + gradient_control(pm, graph, family)) / (2 * h)
    return jac


@pytest.mark.parametrize("graph", [triangle_flex(), tetrahedron_flex()])
@pytest.mark.parametrize("family", [QUADRATIC, RATIONAL])
def test_hessian_matches_finite_differences(graph, family):
    for _ in range(5):
        p = RNG.uniform(-5, 5, (graph.num_nodes, graph.dimension))
        h = assemble_hessian(p, graph, family).h
        fd = fd_jacobian(p, graph, family)
        scale = max(1.0, np.abs(h).max())
        assert np.abs(h - fd).max() / scale < 1e-6


def test_hessian_block_row_sums_vanish():
    g = tetrahedron_flex()
    p = RNG.uniform(-5, 5, (5, 3))
    h = assemble_hessian(p, g, QUADRATIC).h
    d = g.dimension
    total = sum(h[i * d:(i + 1) * d, :] for i in range(g.num_nodes))
    assert np.abs(total).max() < 1e-12


def test_axis_sorted_spectrum_preserved():
    g = triangle_flex()
    p = RNG.uniform(-5, 5, (4, 2))
    bundle = assemble_hessian(p, g, QUADRATIC)
    cb = coordinate_blocks(bundle)
    w0 = np.linalg.eigvalsh(bundle.h)
    w1 = np.linalg.eigvalsh(cb.sorted_h)
    np.testing.assert_allclose(w0, w1, atol=1e-9)
    # block reconstruction matches the permuted matrix
    n = g.num_nodes
    for (a, b), blk in cb.blocks.items():
        np.testing.assert_allclose(
            cb.sorted_h[a * n:(a + 1) * n, b * n:(b + 1) * n], blk, atol=1e-10)


def test_axis_sort_permutation_shape():
    perm = axis_sort_permutation(4, 2)
    assert sorted(perm.tolist()) == list(range(8))
    assert perm[0] == 0 and perm[4] == 1  # axis-major ordering


def test_rigid_motion_null_space_at_desired_equilibrium():
    for g in (triangle_flex(), tetrahedron_flex()):
        p = desired_equilibrium(g)
        h = assemble_hessian(p, g, QUADRATIC).h
        d = g.dimension
        # translations
        for c in np.eye(d):
            v = np.tile(c, g.num_nodes)
            assert np.abs(h @ v).max() < 1e-10
        # infinitesimal rotations about the centroid
        centered = p - p.mean(axis=0)
        if d == 2:
            spins = [np.array([[0.0, -1.0], [1.0, 0.0]])]
        else:
            spins = []
            for a, b in itertools.combinations(range(3), 2):
                s = np.zeros((3, 3))
                s[a, b], s[b, a] = -1.0, 1.0
                spins.append(s)
        for s in spins:
            v = (centered @ s.T).reshape(-1)
            assert np.abs(h @ v).max() < 1e-10


def test_psd_check_at_desired_equilibrium():
    g = triangle_flex()
    p = desired_equilibrium(g)
    h = assemble_hessian(p, g, QUADRATIC).h
    min_eig, is_psd = psd_check(h)
    assert is_psd
    assert min_eig > -1e-10
    with pytest.raises(ValueError):
        psd_check(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_classify_desired_and_non_equilibrium():
    g = triangle_flex()
    p = desired_equilibrium(g)
    assert classify(p, g, QUADRATIC).kind == "desired"
    p2 = p.copy()
    p2[0] += 1.0
    assert classify(p2, g, QUADRATIC).kind == "not_equilibrium"


def test_classify_flex_coincident():
    g = tetrahedron_flex()
    p = flex_coincident_equilibrium(g)
    cls = classify(p, g, QUADRATIC)
    assert cls.kind == "flex_coincident"
    assert cls.diagnostics["flex_gap"] < 1e-12


def test_classify_collinear_subform():
    g = triangle_flex()
    entry = find_collinear_equilibrium(g, QUADRATIC)
    cls = classify(entry.positions, g, QUADRATIC)
    assert cls.kind == "degenerate_rigid"
    assert cls.subform == "collinear_distinct"


def test_alignment_rotation_moves_degeneracy_to_last_axis():
    g = triangle_flex()
    entry = find_collinear_equilibrium(g, QUADRATIC)
    th = 0.7
    r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    p = entry.positions @ r.T
    q = alignment_rotation(p, g)
    aligned = p @ q.T
    # rigid agents collinear along the first axis after alignment
    assert np.ptp(aligned[:3, 1]) < 1e-8
    assert abs(np.linalg.det(q) - 1.0) < 1e-12


def test_flex_sum_witness_form_equals_flex_gradient():
    """At the flex-coincident equilibrium the certified direction's quadratic
    form equals the flex edge's potential gradient exactly."""
    for g in (triangle_flex(), tetrahedron_flex()):
        p = flex_coincident_equilibrium(g)
        w = instability_witness(p, g, QUADRATIC)
        assert w.tag == "flex_sum"
        dbar_f = g.desired[g.flex_edge_index]
        assert w.quadratic_form == pytest.approx(float(QUADRATIC.g(-dbar_f**2, dbar_f)),
                                                 abs=1e-12)


def test_indicator_witness_form_equals_incident_gradient_sum():
    g = triangle_flex()
    entry = find_collinear_equilibrium(g, QUADRATIC)
    w = instability_witness(entry.positions, g, QUADRATIC)
    assert w.tag == "agent_indicator"
    agent = int(np.argmax(np.abs(w.vector))) + 1
    from rigidflex.control import edge_states
    st = edge_states(entry.positions, g, QUADRATIC)
    incident = sum(st.g[k] for k, (i, j) in enumerate(g.edges) if agent in (i, j))
    assert w.quadratic_form == pytest.approx(incident, abs=1e-9)


def test_witness_full_vector_is_negative_direction_of_full_hessian():
    g = tetrahedron_flex()
    entries, _ = build_catalog(g, QUADRATIC)
    for entry in entries:
        h = assemble_hessian(entry.positions, g, QUADRATIC).h
        w = instability_witness(entry.positions, g, QUADRATIC)
        q_full = float(w.full_vector @ h @ w.full_vector)
        assert q_full == pytest.approx(w.quadratic_form, rel=1e-9, abs=1e-9)
        assert q_full < 0


def test_witness_refused_for_desired_equilibrium():
    g = triangle_flex()
    with pytest.raises(ValueError):
        instability_witness(desired_equilibrium(g), g, QUADRATIC)


def test_witness_not_found_is_raised_not_faked():
    # a desired-shape realization misclassified on purpose has a PSD block
    g = triangle_flex()
    p = desired_equilibrium(g)
    cls = classify(p, g, QUADRATIC)
    forged = type(cls)(kind="degenerate_rigid", subform="collinear_distinct",
                       diagnostics={}, ambiguous=False)
    with pytest.raises(WitnessNotFoundError):
        instability_witness(p, g, QUADRATIC, cls=forged)


def test_sign_properties_pass_on_catalog():
    for g, fam in [(triangle_flex(), QUADRATIC), (tetrahedron_flex(), QUADRATIC),
                   (triangle_flex(), RATIONAL), (tetrahedron_flex(), RATIONAL)]:
        entries, _ = build_catalog(g, fam)
        for entry in entries:
            if entry.kind != "degenerate_rigid":
                continue
            claims = verify_sign_properties(entry.positions, g, fam)
            assert claims, entry.subform
            assert all(c.passed for c in claims), (entry.subform,
                                                   [c.description for c in claims
                                                    if not c.passed])


def test_analyze_report_serializes():
    import json
    g = triangle_flex()
    entry = find_collinear_equilibrium(g, QUADRATIC)
    report = analyze(entry.positions, g, QUADRATIC)
    doc = json.dumps(report.to_json_dict(), allow_nan=False)
    assert "collinear_distinct" in doc
    assert report.witness is not None
    assert not report.positive_semidefinite


def test_analyze_desired_is_psd():
    g = tetrahedron_flex()
    report = analyze(desired_equilibrium(g), g, QUADRATIC)
    assert report.classification.kind == "desired"
    assert report.positive_semidefinite
    assert report.witness is None


def test_angle_inequalities_regular_tetrahedron():
    lengths = {pair: 4.0 for pair in itertools.combinations(range(1, 5), 2)}
    claims = verify_angle_inequalities(lengths)
    assert all(c.passed for c in claims)
    sums = [c.value for c in claims if "angle sum" in c.description]
    np.testing.assert_allclose(sums, 180.0, atol=1e-9)


def test_angle_inequalities_reject_degenerate_lengths():
    lengths = {pair: 4.0 for pair in itertools.combinations(range(1, 5), 2)}
    lengths[(1, 2)] = 8.0  # collapses the tetrahedron onto a plane (and worse)
    with pytest.raises(ValueError):
        verify_angle_inequalities(lengths)
