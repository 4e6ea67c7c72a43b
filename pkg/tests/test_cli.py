"""Command-line interface: verbs, artifacts, exit codes, determinism."""

import json

import numpy as np
import pytest

from rigidflex.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, bundled_scenario_names, main
from rigidflex.graph import graph_to_json, triangle_flex
from rigidflex.oracle import desired_equilibrium, find_collinear_equilibrium
from rigidflex.potentials import QUADRATIC


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "triangle.json"
    path.write_text(json.dumps(graph_to_json(triangle_flex())))
    return path


def small_scenario(tmp_path, **overrides):
    doc = {
        "graph": "triangle_flex",
        "family": "quadratic",
        "initial": desired_equilibrium(triangle_flex()).tolist(),
        "t_end": 0.05,
        "dt": 0.001,
        "record_every": 10,
    }
    doc.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_bundled_scenarios_present():
    names = bundled_scenario_names()
    assert {"triangle_flex_2d", "triangle_flex_leader",
            "tetra_flex_3d", "tetra_flex_leader"} <= set(names)


def test_run_writes_trajectory_and_events(tmp_path):
    scen = small_scenario(tmp_path)
    assert main(["run", str(scen), "--out", str(tmp_path / "out")]) == EXIT_OK
    csv = tmp_path / "out" / "scenario_trajectory.csv"
    events = tmp_path / "out" / "scenario_events.json"
    assert csv.exists() and events.exists()
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert data.shape[0] >= 2


def test_run_constant_trajectory_from_desired_start(tmp_path):
    scen = small_scenario(tmp_path)
    main(["run", str(scen), "--out", str(tmp_path / "out")])
    data = np.loadtxt(tmp_path / "out" / "scenario_trajectory.csv",
                      delimiter=",", skiprows=1)
    states = data[:, 1:9]
    assert np.abs(states - states[0]).max() < 1e-12


def test_run_outputs_are_deterministic(tmp_path):
    scen = small_scenario(tmp_path, events=[
        {"time": 0.02, "agent": 4, "magnitude": 0.01}])
    main(["run", str(scen), "--out", str(tmp_path / "a"), "--seed", "3"])
    main(["run", str(scen), "--out", str(tmp_path / "b"), "--seed", "3"])
    a = (tmp_path / "a" / "scenario_trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "scenario_trajectory.csv").read_bytes()
    assert a == b


def test_run_bad_scenario_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == EXIT_CONFIG
    path.write_text(json.dumps({"graph": "triangle_flex"}))  # missing fields
    assert main(["run", str(path)]) == EXIT_CONFIG
    assert main(["run", "no_such_scenario"]) == EXIT_CONFIG


def test_analyze_saddle_reports_witness(tmp_path, graph_file):
    entry = find_collinear_equilibrium(triangle_flex(), QUADRATIC)
    real = tmp_path / "saddle.json"
    real.write_text(json.dumps({"positions": entry.positions.tolist()}))
    assert main(["analyze", str(real), str(graph_file),
                 "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "saddle_report.json").read_text())
    assert report["class"] == "degenerate_rigid"
    assert report["subform"] == "collinear_distinct"
    assert report["witness"]["quadratic_form"] < 0
    assert all(c["passed"] for c in report["claims"])


def test_analyze_non_equilibrium(tmp_path, graph_file, capsys):
    real = tmp_path / "free.json"
    real.write_text(json.dumps({"positions":
                                [[9.0, 0.0], [0.0, 0.0], [0.0, 9.0], [5.0, 5.0]]}))
    assert main(["analyze", str(real), str(graph_file)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["class"] == "not_equilibrium"
    assert report["diagnostics"]["residual"] > 1.0


def test_catalog_full_witness_rate(tmp_path, graph_file, capsys):
    assert main(["catalog", str(graph_file), "--family", "quadratic",
                 "--out", str(tmp_path / "cat")]) == EXIT_OK
    summary = json.loads((tmp_path / "cat" / "summary.json").read_text())
    assert summary["witness_success_rate"] == 1.0
    lines = (tmp_path / "cat" / "catalog.jsonl").read_text().splitlines()
    assert len(lines) == summary["entries"]
    table = json.loads((tmp_path / "cat" / "sign_table.json").read_text())
    assert all(c["passed"] for row in table for c in row["claims"])


def test_catalog_subform_selection(tmp_path, graph_file):
    assert main(["catalog", str(graph_file), "--subforms", "all_coincident",
                 "--out", str(tmp_path / "cat")]) == EXIT_OK
    lines = (tmp_path / "cat" / "catalog.jsonl").read_text().splitlines()
    subforms = {json.loads(x)["subform"] for x in lines}
    assert subforms == {None, "all_coincident"}


def test_validate_potential_ok(capsys):
    assert main(["validate-potential", "quadratic"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["violations"] == []


def test_unknown_verb_is_config_error(capsys):
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_run_rejects_event_after_horizon(tmp_path):
    scen = small_scenario(tmp_path, events=[
        {"time": 9.9, "agent": 4, "magnitude": 0.01}])
    assert main(["run", str(scen)]) == EXIT_CONFIG
