"""Command-line front end: scenario runs, stability analysis, catalogs.

Verbs:
  run                simulate a scenario JSON file, emit trajectory + events
  analyze            classify a realization and report spectrum/witness
  catalog            construct the undesired-equilibrium catalog for a graph
  validate-potential check a built-in potential family's defining conditions

Exit codes: 0 success, 2 configuration/parse error, 3 numeric or contract
failure (non-convergence, missing witness, monotonicity violation, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .control import leader_spec_from_json
from .graph import FormationGraph, GraphError, graph_from_json, triangle_flex, tetrahedron_flex
from .integrator import IntegrationError, PerturbationEvent, integrate, random_perturbation
from .oracle import OracleError, build_catalog, newton_polish
from .potentials import FAMILIES, get_family, validate_family
from .stability import WitnessNotFoundError, analyze, verify_sign_properties

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

LYAPUNOV_SLACK = 1e-10              # largest tolerated per-step increase


class ScenarioError(ValueError):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read JSON from {path}: {exc}")


def _resolve_scenario(name_or_path) -> dict:
    p = Path(name_or_path)
    if p.exists():
        return _load_json(p)
    bundled = resources.files("rigidflex") / "scenarios" / f"{name_or_path}.json"
    if bundled.is_file():
        return json.loads(bundled.read_text())
    raise ScenarioError(f"scenario {name_or_path!r} is neither a file nor a "
                        f"bundled scenario name")


def bundled_scenario_names() -> list[str]:
    root = resources.files("rigidflex") / "scenarios"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


def _parse_graph(doc) -> FormationGraph:
    if isinstance(doc, str):
        builtin = {"triangle_flex": triangle_flex, "tetrahedron_flex": tetrahedron_flex}
        if doc not in builtin:
            raise ScenarioError(f"unknown builtin graph {doc!r}")
        return builtin[doc]()
    return graph_from_json(doc)


def _parse_events(docs, dimension, default_seed):
    events = []
    for k, doc in enumerate(docs or ()):
        if "displacement" in doc:
            events.append(PerturbationEvent(time=float(doc["time"]),
                                            agent=int(doc["agent"]),
                                            displacement=np.asarray(doc["displacement"], dtype=float)))
        else:
            seed = int(doc.get("seed", default_seed + k))
            events.append(random_perturbation(time=float(doc["time"]),
                                              agent=int(doc["agent"]),
                                              dimension=dimension,
                                              magnitude=float(doc["magnitude"]),
                                              seed=seed))
    return events


def _positions_from_doc(doc, graph):
    arr = np.asarray(doc, dtype=float)
    if arr.shape not in ((graph.num_nodes, graph.dimension),
                         (graph.num_nodes * graph.dimension,)):
        raise ScenarioError(f"initial realization has shape {arr.shape}")
    return arr.reshape(graph.num_nodes, graph.dimension)


def _cmd_run(args) -> int:
    doc = _resolve_scenario(args.scenario)
    try:
        graph = _parse_graph(doc["graph"])
        family = get_family(doc.get("family", "quadratic"))
        p0 = _positions_from_doc(doc["initial"], graph)
        t_end = float(doc["t_end"])
        events = _parse_events(doc.get("events"), graph.dimension, args.seed)
        leader = leader_spec_from_json(doc.get("leader"), graph.dimension)
    except (KeyError, ValueError, GraphError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}")

    traj = integrate(
        p0, graph, family, t_end,
        dt=float(doc.get("dt", 1e-3)),
        leader=leader, events=events,
        record_every=int(doc.get("record_every", 10)),
        eq_tol=args.tol_eq if args.tol_eq is not None else float(doc.get("eq_tol", 1e-9)),
        adaptive=bool(doc.get("adaptive", False)),
        rtol=float(doc.get("rtol", 1e-8)),
    )

    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    if args.format == "csv":
        traj.to_csv(out / f"{stem}_trajectory.csv")
    else:
        _write_json(out / f"{stem}_trajectory.json", {
            "times": [float(t) for t in traj.times],
            "states": [[float(x) for x in row] for row in traj.states],
        })
    traj.events_to_json(out / f"{stem}_events.json")

    analysis = doc.get("analysis", {})
    if analysis.get("hessian_at_equilibria"):
        hits = [t for t, kind in traj.events if kind == "equilibrium_detected"]
        for k, t_hit in enumerate(hits):
            idx = int(np.argmin(np.abs(traj.times - t_hit)))
            state = traj.states[idx]
            try:
                state = newton_polish(state, graph, family)
            except OracleError:
                pass
            report = analyze(state, graph, family, eig_tol=args.tol_eig)
            _write_json(out / f"{stem}_equilibrium_{k:03d}.json",
                        {"time": float(t_hit), **report.to_json_dict()})

    if traj.max_lyapunov_increase > LYAPUNOV_SLACK:
        print(f"run FAILED: Lyapunov quantity increased by "
              f"{traj.max_lyapunov_increase:.3e} in one step", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"run ok: {len(traj.times)} samples, final gradient norm "
          f"{traj.grad_norms[-1]:.3e}, events {[k for _, k in traj.events]}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    graph = _parse_graph(_load_json(args.graph))
    doc = _load_json(args.realization)
    p = _positions_from_doc(doc["positions"] if isinstance(doc, dict) else doc, graph)
    family = get_family(args.family)
    try:
        report = analyze(p, graph, family, eq_tol=args.tol_eq or 1e-9,
                         eig_tol=args.tol_eig)
    except WitnessNotFoundError as exc:
        print(f"analysis FAILED: classified undesired but no instability "
              f"witness found: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    payload = report.to_json_dict()
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.out) / (Path(args.realization).stem + "_report.json"),
                    payload)
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return EXIT_OK


def _cmd_catalog(args) -> int:
    graph = _parse_graph(_load_json(args.graph))
    family = get_family(args.family)
    subforms = args.subforms.split(",") if args.subforms else None
    entries, failures = build_catalog(graph, family, subforms=subforms)

    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    sign_table = []
    witness_ok = 0
    undesired = 0
    with open(out / "catalog.jsonl", "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_json_dict()) + "\n")
    for entry in entries:
        if entry.kind not in ("flex_coincident", "degenerate_rigid"):
            continue
        undesired += 1
        try:
            report = analyze(entry.positions, graph, family, eig_tol=args.tol_eig)
            if report.witness is not None:
                witness_ok += 1
        except (WitnessNotFoundError, np.linalg.LinAlgError):
            report = None
        if entry.kind == "degenerate_rigid":
            claims = verify_sign_properties(entry.positions, graph, family)
            sign_table.append({
                "subform": entry.subform,
                "claims": [{"claim": c.description, "value": c.value,
                            "passed": c.passed} for c in claims],
            })
    summary = {
        "entries": len(entries),
        "undesired": undesired,
        "witnesses_found": witness_ok,
        "witness_success_rate": (witness_ok / undesired) if undesired else None,
        "construction_failures": failures,
    }
    _write_json(out / "sign_table.json", sign_table)
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2))
    if undesired and witness_ok != undesired:
        print("catalog FAILED: some undesired entries lack an instability "
              "witness", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_validate_potential(args) -> int:
    family = get_family(args.family)
    problems = validate_family(family, args.dbar)
    payload = {"family": family.name, "dbar": args.dbar, "violations": problems}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.out) / f"validate_{family.name}.json", payload)
    print(json.dumps(payload, indent=2))
    return EXIT_OK if not problems else EXIT_NUMERIC


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigidflex",
        description="Formation-control simulation and stability analysis")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="default RNG seed")
        sp.add_argument("--tol-eig", type=float, default=None,
                        help="eigenvalue tolerance (default 1e-8 * ||H||)")
        sp.add_argument("--tol-eq", type=float, default=None,
                        help="equilibrium balance tolerance")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("run", help="simulate a scenario file or bundled name")
    sp.add_argument("scenario")
    common(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("analyze", help="stability report for a realization")
    sp.add_argument("realization", help="JSON file with positions")
    sp.add_argument("graph", help="graph JSON file")
    sp.add_argument("--family", default="quadratic", choices=sorted(FAMILIES))
    common(sp)
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("catalog", help="undesired-equilibrium catalog")
    sp.add_argument("graph", help="graph JSON file")
    sp.add_argument("--family", default="quadratic", choices=sorted(FAMILIES))
    sp.add_argument("--subforms", default=None,
                    help="comma-separated subform names (default: all)")
    common(sp)
    sp.set_defaults(func=_cmd_catalog)

    sp = sub.add_parser("validate-potential", help="check family conditions")
    sp.add_argument("family", choices=sorted(FAMILIES))
    sp.add_argument("--dbar", type=float, default=4.0)
    common(sp)
    sp.set_defaults(func=_cmd_validate_potential)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (IntegrationError, OracleError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, GraphError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
