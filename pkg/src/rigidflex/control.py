"""Gradient control law, local-frame form, and the leader-augmented variant.

Convention: the shape potential is V(p) = 1/2 * sum_edges phi(e), chosen so
that the per-agent control u_i = -sum_j g_ij z_ij is exactly the negative
gradient of V (with e = ||z||^2 - dbar^2, grad_p_i phi(e_ij) = 2 g_ij z_ij).
Scaling V leaves trajectories, equilibria, and stability verdicts unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph import FormationGraph, as_positions
from .potentials import PotentialFamily, check_domain


@dataclass(frozen=True)
class EdgeState:
    """Per-edge kinematics and potential derivatives, in edge order."""

    z: np.ndarray      # (m, d) edge vectors p_i - p_j
    e: np.ndarray      # (m,) squared distance errors
    g: np.ndarray      # (m,) d phi / d e
    rho: np.ndarray    # (m,) d g / d e


def edge_states(p, graph: FormationGraph, family: PotentialFamily) -> EdgeState:
    pos = as_positions(p, graph)
    z = pos[graph.edge_tails] - pos[graph.edge_heads]
    dbar = graph.desired_array
    e = np.einsum("ij,ij->i", z, z) - dbar**2
    check_domain(e, dbar)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.asarray(family.g(e, dbar), dtype=float)
        rho = np.asarray(family.rho(e, dbar), dtype=float)
    return EdgeState(z=z, e=e, g=g, rho=rho)


def _edge_forces(state: EdgeState) -> np.ndarray:
    """(m, d) array g_e * z_e; exactly-zero edge vectors contribute zero
    even for families whose g diverges at the coincidence boundary."""
    with np.errstate(invalid="ignore"):
        f = state.g[:, None] * state.z
    zero = np.einsum("ij,ij->i", state.z, state.z) == 0.0
    if np.any(zero):
        f[zero] = 0.0
    return f


def potential_value(p, graph: FormationGraph, family: PotentialFamily) -> float:
    state = edge_states(p, graph, family)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.asarray(family.phi(state.e, graph.desired_array), dtype=float)
    return 0.5 * float(np.sum(phi))


def balance_residuals(p, graph: FormationGraph, family: PotentialFamily) -> np.ndarray:
    """(N+1,) array of per-agent balance norms ||sum_j g_ij z_ij||."""
    u = gradient_control(p, graph, family).reshape(graph.num_nodes, graph.dimension)
    return np.linalg.norm(u, axis=1)


def gradient_control(p, graph: FormationGraph, family: PotentialFamily) -> np.ndarray:
    """Stacked control u with blocks u_i = -sum_j g_ij z_ij."""
    state = edge_states(p, graph, family)
    f = _edge_forces(state)
    u = np.zeros((graph.num_nodes, graph.dimension))
    np.subtract.at(u, graph.edge_tails, f)
    np.add.at(u, graph.edge_heads, f)
    return u.reshape(-1)


def local_frame_control(neighbor_offsets, g_values) -> np.ndarray:
    """Control of one agent from measurements in its own frame.

    ``neighbor_offsets`` holds the relative positions p_i - p_j expressed in
    the agent's rotated frame, one row per neighbor; ``g_values`` the matching
    potential gradients.  No alignment between agents' frames is needed: the
    result equals the rotated global-frame control block.
    """
    offsets = np.atleast_2d(np.asarray(neighbor_offsets, dtype=float))
    g = np.asarray(g_values, dtype=float)
    return -(g[:, None] * offsets).sum(axis=0)


@dataclass(frozen=True)
class LeaderSpec:
    """Additional flex-agent input.

    mode 'none'     : plain gradient law.
    mode 'windowed' : v(t) active only on [t0, tf], zero outside.
    mode 'target'   : v(t) = k_f * (p_t - p_flex), pulls the flex agent to p_t.
    """

    mode: str = "none"
    v: Callable[[float], np.ndarray] | None = None
    t0: float = 0.0
    tf: float = 0.0
    k_f: float = 0.0
    p_t: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("none", "windowed", "target"):
            raise ValueError(f"unknown leader mode {self.mode!r}")
        if self.mode == "windowed":
            if self.v is None or not np.isfinite(self.tf) or self.tf < self.t0:
                raise ValueError("windowed mode needs v(t) and a finite window [t0, tf]")
        if self.mode == "target":
            if self.k_f <= 0 or self.p_t is None:
                raise ValueError("target mode needs k_f > 0 and a target point")
            object.__setattr__(self, "p_t", np.asarray(self.p_t, dtype=float))

    def flex_input(self, t: float, p_flex: np.ndarray) -> np.ndarray:
        if self.mode == "windowed":
            if self.t0 <= t <= self.tf:
                return np.asarray(self.v(t), dtype=float)
            return np.zeros_like(p_flex)
        if self.mode == "target":
            return self.k_f * (self.p_t - p_flex)
        return np.zeros_like(p_flex)


def leader_spec_from_json(doc, dimension: int) -> LeaderSpec:
    """Parse {"mode": ...} leader documents; piecewise-constant samples for
    windowed mode as {"t0":, "tf":, "v": [[t, vx, vy(, vz)], ...]}."""
    if doc is None:
        return LeaderSpec()
    mode = doc.get("mode", "none")
    if mode == "none":
        return LeaderSpec()
    if mode == "target":
        return LeaderSpec(mode="target", k_f=float(doc["k_f"]), p_t=np.asarray(doc["p_t"], dtype=float))
    if mode == "windowed":
        samples = np.asarray(doc["v"], dtype=float)
        times, values = samples[:, 0], samples[:, 1:]
        if values.shape[1] != dimension:
            raise ValueError("windowed samples do not match the ambient dimension")

        def v(t, times=times, values=values):
            k = int(np.searchsorted(times, t, side="right")) - 1
            k = min(max(k, 0), len(times) - 1)
            return values[k]

        return LeaderSpec(mode="windowed", v=v, t0=float(doc["t0"]), tf=float(doc["tf"]))
    raise ValueError(f"unknown leader mode {mode!r}")


def leader_control(p, t: float, graph: FormationGraph, family: PotentialFamily,
                   spec: LeaderSpec) -> np.ndarray:
    """Gradient control plus the leader input injected into the flex block."""
    u = gradient_control(p, graph, family)
    if spec.mode != "none":
        d = graph.dimension
        pos = as_positions(p, graph)
        u[-d:] += spec.flex_input(t, pos[-1])
    return u


def composite_potential(p, graph: FormationGraph, family: PotentialFamily,
                        spec: LeaderSpec) -> float:
    """Lyapunov quantity for target mode: V + (k_f/2) ||p_t - p_flex||^2.

    With V = 1/2 sum phi (so that u = -grad V exactly), the time derivative is
    -sum_{i<=N} ||u_i||^2 - ||g_f z_f + v_f||^2 <= 0.  Reduces to V for the
    other modes.
    """
    v = potential_value(p, graph, family)
    if spec.mode == "target":
        pos = as_positions(p, graph)
        v += 0.5 * spec.k_f * float(np.sum((spec.p_t - pos[-1]) ** 2))
    return v
