"""Formation graphs: node/edge structure, incidence matrices, relative positions.

A formation graph is a rigid interaction graph on nodes 1..N plus one flex
node N+1 attached by a single edge (N, N+1).  Edges are stored in
lexicographic order of their (i, j) pairs with i < j; that order is part of
the public contract (it fixes the column order of the incidence matrix and
the block order of every edge-indexed quantity).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Raised when a formation graph violates its structural invariants."""


@dataclass(frozen=True)
class FormationGraph:
    """Rigid graph plus flex node, with desired inter-agent distances.

    num_nodes : total node count N+1 (1-based node labels)
    dimension : ambient dimension, 2 or 3
    edges     : tuple of (i, j) pairs, i < j, lexicographically sorted
    desired   : desired distance per edge, aligned with ``edges``
    flex_edge : the single edge attaching node N+1; must be (N, N+1)
    """

    num_nodes: int
    dimension: int
    edges: tuple[tuple[int, int], ...]
    desired: tuple[float, ...]
    flex_edge: tuple[int, int]

    def __post_init__(self):
        n, d = self.num_nodes, self.dimension
        if d not in (2, 3):
            raise GraphError(f"dimension must be 2 or 3, got {d}")
        if n < 3:
            raise GraphError("need at least 2 rigid nodes plus the flex node")
        pairs = [tuple(e) for e in self.edges]
        if pairs != sorted(set(pairs)):
            raise GraphError("edges must be lexicographically sorted and unique")
        for (i, j) in pairs:
            if not (1 <= i < j <= n):
                raise GraphError(f"edge ({i},{j}) out of range or not i<j")
        if len(self.desired) != len(pairs):
            raise GraphError("desired distances must align with edges")
        if any(db <= 0 for db in self.desired):
            raise GraphError("desired distances must be strictly positive")
        flex = tuple(self.flex_edge)
        if flex != (n - 1, n):
            raise GraphError(f"flex edge must be ({n-1},{n}), got {flex}")
        incident_to_flex = [e for e in pairs if n in e]
        if incident_to_flex != [flex]:
            raise GraphError("flex node must have degree exactly 1 via the flex edge")

    # -- derived arrays (computed once, cached on the instance) ------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_tails(self) -> np.ndarray:
        """0-based index of node i for each edge (i, j)."""
        return np.array([i - 1 for i, _ in self.edges], dtype=int)

    @property
    def edge_heads(self) -> np.ndarray:
        """0-based index of node j for each edge (i, j)."""
        return np.array([j - 1 for _, j in self.edges], dtype=int)

    @property
    def desired_array(self) -> np.ndarray:
        return np.array(self.desired, dtype=float)

    @property
    def flex_edge_index(self) -> int:
        return self.edges.index(tuple(self.flex_edge))

    @property
    def rigid_nodes(self) -> range:
        """0-based indices of the rigid-subgraph nodes 1..N."""
        return range(self.num_nodes - 1)

    def edge_index(self, i: int, j: int) -> int:
        """Position of edge (i, j) (1-based labels, either order)."""
        a, b = min(i, j), max(i, j)
        return self.edges.index((a, b))

    def neighbors(self, i: int) -> list[int]:
        """1-based neighbor labels of node i."""
        out = []
        for (a, b) in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out

    def certified_topology(self) -> str | None:
        """'triangle' / 'tetrahedron' when the instability theory applies, else None."""
        n = self.num_nodes
        rigid = [e for e in self.edges if e != tuple(self.flex_edge)]
        if n == 4 and self.dimension == 2 and rigid == [(1, 2), (1, 3), (2, 3)]:
            return "triangle"
        k4 = sorted(itertools.combinations(range(1, 5), 2))
        if n == 5 and self.dimension == 3 and rigid == [tuple(e) for e in k4]:
            return "tetrahedron"
        return None


def triangle_flex(desired=(4.0, 4.0, 4.0, 4.0)) -> FormationGraph:
    """Triangle (1,2,3) plus flex node 4 in the plane."""
    return FormationGraph(
        num_nodes=4,
        dimension=2,
        edges=((1, 2), (1, 3), (2, 3), (3, 4)),
        desired=tuple(float(x) for x in desired),
        flex_edge=(3, 4),
    )


def tetrahedron_flex(desired=(4.0,) * 7) -> FormationGraph:
    """Tetrahedron (1,2,3,4) plus flex node 5 in 3-D.

    Edge order: (1,2),(1,3),(1,4),(2,3),(2,4),(3,4),(4,5).
    """
    edges = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4), (4, 5))
    return FormationGraph(
        num_nodes=5,
        dimension=3,
        edges=edges,
        desired=tuple(float(x) for x in desired),
        flex_edge=(4, 5),
    )


def graph_from_json(doc) -> FormationGraph:
    """Build a graph from the JSON schema.

    Schema: {"dimension": d, "nodes": n, "edges": [[i, j, dbar], ...],
    "flex_edge": [i, j]} with 1-based node indices.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    raw = sorted((int(i), int(j), float(db)) for i, j, db in doc["edges"])
    return FormationGraph(
        num_nodes=int(doc["nodes"]),
        dimension=int(doc["dimension"]),
        edges=tuple((i, j) for i, j, _ in raw),
        desired=tuple(db for _, _, db in raw),
        flex_edge=tuple(int(x) for x in doc["flex_edge"]),
    )


def graph_to_json(graph: FormationGraph) -> dict:
    return {
        "dimension": graph.dimension,
        "nodes": graph.num_nodes,
        "edges": [[i, j, db] for (i, j), db in zip(graph.edges, graph.desired)],
        "flex_edge": list(graph.flex_edge),
    }


def build_incidence(graph: FormationGraph) -> np.ndarray:
    """(N+1) x m incidence matrix B.

    For edge (i, j) with i < j the column carries +1 at row i (sink) and -1
    at row j (source), so that (B^T p)_edge = p_i - p_j.
    """
    b = np.zeros((graph.num_nodes, graph.num_edges), dtype=int)
    b[graph.edge_tails, np.arange(graph.num_edges)] = 1
    b[graph.edge_heads, np.arange(graph.num_edges)] = -1
    return b


def as_positions(p, graph: FormationGraph) -> np.ndarray:
    """Validate a realization and return it as an (N+1, d) array."""
    arr = np.asarray(p, dtype=float)
    n, d = graph.num_nodes, graph.dimension
    if arr.shape == (n, d):
        return arr
    if arr.shape == (n * d,):
        return arr.reshape(n, d)
    raise GraphError(f"realization has shape {arr.shape}, expected ({n},{d}) or ({n*d},)")


def relative_positions(p, graph: FormationGraph) -> np.ndarray:
    """(m, d) array of edge vectors z_ij = p_i - p_j, in edge order."""
    pos = as_positions(p, graph)
    return pos[graph.edge_tails] - pos[graph.edge_heads]


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    violations: tuple[tuple[int, int, int], ...] = ()


def check_feasible(graph: FormationGraph) -> Feasibility:
    """Strict triangle inequalities on every 3-cycle present in the edge set."""
    dist = {e: db for e, db in zip(graph.edges, graph.desired)}

    def d(a, b):
        return dist.get((min(a, b), max(a, b)))

    bad = []
    for i, j, k in itertools.combinations(range(1, graph.num_nodes + 1), 3):
        dij, djk, dki = d(i, j), d(j, k), d(k, i)
        if dij is None or djk is None or dki is None:
            continue
        if not (dij + djk > dki and djk + dki > dij and dki + dij > djk):
            bad.append((i, j, k))
    return Feasibility(feasible=not bad, violations=tuple(bad))
