"""Closed-loop simulation of the single-integrator formation dynamics.

Fixed-step classical Runge-Kutta (RK4) by default, with exact clamping onto
scheduled event times; an optional adaptive mode delegates to scipy's RK45.
Along every run the relevant Lyapunov quantity (V, or the composite target
potential in leader-target mode) is monitored step by step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .control import (
    LeaderSpec,
    composite_potential,
    gradient_control,
    leader_control,
)
from .graph import FormationGraph, as_positions
from .potentials import PotentialFamily


class IntegrationError(RuntimeError):
    def __init__(self, message, time=None, last_state=None):
        super().__init__(message)
        self.time = time
        self.last_state = last_state


@dataclass(frozen=True)
class PerturbationEvent:
    """Instantaneous displacement of one agent at a scheduled time."""

    time: float
    agent: int                      # 1-based agent label
    displacement: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "displacement", np.asarray(self.displacement, dtype=float))
        if self.agent < 1:
            raise ValueError("agent labels are 1-based")
        if not np.any(self.displacement != 0):
            # a zero displacement is allowed but useless; magnitude > 0 is the
            # intended contract, callers constructing zero events get identity
            pass


def random_perturbation(time: float, agent: int, dimension: int, magnitude: float,
                        seed: int) -> PerturbationEvent:
    """Seeded random-direction displacement of fixed magnitude."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dimension)
    v *= magnitude / np.linalg.norm(v)
    return PerturbationEvent(time=time, agent=agent, displacement=v)


def apply_perturbation(p, event: PerturbationEvent, graph: FormationGraph) -> np.ndarray:
    pos = as_positions(p, graph).copy()
    if event.agent > graph.num_nodes:
        raise ValueError(f"agent {event.agent} out of range for {graph.num_nodes} nodes")
    if event.displacement.shape != (graph.dimension,):
        raise ValueError("displacement does not match the ambient dimension")
    pos[event.agent - 1] += event.displacement
    return pos.reshape(-1)


@dataclass(frozen=True)
class EquilibriumCheck:
    at_equilibrium: bool
    residual: float


def detect_equilibrium(p, graph: FormationGraph, family: PotentialFamily,
                       tol: float = 1e-9) -> EquilibriumCheck:
    """Equilibrium iff max_i ||sum_j g_ij z_ij|| < tol."""
    u = gradient_control(p, graph, family).reshape(graph.num_nodes, graph.dimension)
    r = float(np.linalg.norm(u, axis=1).max())
    return EquilibriumCheck(at_equilibrium=r < tol, residual=r)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray              # (k, (N+1) d)
    edge_errors: np.ndarray         # (k, m)
    grad_norms: np.ndarray          # (k,)
    events: list = field(default_factory=list)   # (time, kind) pairs
    max_lyapunov_increase: float = -np.inf
    graph: FormationGraph | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path):
        g = self.graph
        coords = "xyz"[: g.dimension]
        header = ["t"]
        for i in range(1, g.num_nodes + 1):
            header += [f"{c}{i}" for c in coords]
        header += [f"e_{i}{j}" for (i, j) in g.edges]
        header += ["gradnorm"]
        data = np.column_stack([self.times, self.states, self.edge_errors, self.grad_norms])
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    def events_to_json(self, path):
        with open(path, "w") as fh:
            json.dump([{"time": t, "kind": k} for t, k in self.events], fh, indent=2)
            fh.write("\n")


def _rk4_step(f, t, p, h):
    k1 = f(t, p)
    k2 = f(t + 0.5 * h, p + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, p + 0.5 * h * k2)
    k4 = f(t + h, p + h * k3)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(p0, graph: FormationGraph, family: PotentialFamily, t_end: float,
              dt: float = 1e-3, leader: LeaderSpec | None = None,
              events=(), record_every: int = 10, eq_tol: float = 1e-9,
              adaptive: bool = False, rtol: float = 1e-8) -> Trajectory:
    """Integrate the closed loop from p0 to t_end.

    Scheduled perturbations are applied as instantaneous state jumps at
    exactly their stated times (step clamping).  The returned trajectory
    carries an event log (equilibrium detection, perturbations, target
    arrival) and the worst per-step increase of the Lyapunov quantity.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    leader = leader or LeaderSpec()
    p = as_positions(p0, graph).reshape(-1).astype(float)
    dbar2 = graph.desired_array**2

    def rhs(t, state):
        return leader_control(state, t, graph, family, leader)

    schedule = sorted(events, key=lambda ev: ev.time)
    if any(not (0.0 <= ev.time <= t_end) for ev in schedule):
        raise ValueError("perturbation events must lie inside [0, t_end]")
    boundaries = [ev.time for ev in schedule] + [t_end]

    times, states, errors, gnorms = [], [], [], []
    log: list[tuple[float, str]] = []
    max_dv = -np.inf
    eq_armed = True
    target_armed = leader.mode == "target"

    def record(t, state):
        pos = state.reshape(graph.num_nodes, graph.dimension)
        z = pos[graph.edge_tails] - pos[graph.edge_heads]
        times.append(t)
        states.append(state.copy())
        errors.append(np.einsum("ij,ij->i", z, z) - dbar2)
        gnorms.append(np.linalg.norm(gradient_control(state, graph, family)))

    def check_events(t, state):
        nonlocal eq_armed, target_armed
        chk = detect_equilibrium(state, graph, family, eq_tol)
        if eq_armed and chk.at_equilibrium:
            log.append((t, "equilibrium_detected"))
            eq_armed = False
        elif not eq_armed and chk.residual > 100.0 * eq_tol:
            eq_armed = True
        if target_armed:
            pos = state.reshape(graph.num_nodes, graph.dimension)
            if np.linalg.norm(pos[-1] - leader.p_t) < 1e-3:
                log.append((t, "target_reached"))
                target_armed = False

    t = 0.0
    record(t, p)
    ev_idx = 0
    for boundary in boundaries:
        if adaptive:
            span = boundary - t
            if span > 1e-15:
                n_rec = max(int(round(span / (dt * record_every))), 1)
                t_eval = np.linspace(t, boundary, n_rec + 1)[1:]
                sol = solve_ivp(rhs, (t, boundary), p, method="RK45",
                                rtol=rtol, atol=rtol * 1e-3, t_eval=t_eval,
                                dense_output=False)
                if not sol.success:
                    raise IntegrationError(sol.message, time=t, last_state=p)
                w_prev = composite_potential(p, graph, family, leader)
                for tk, yk in zip(sol.t, sol.y.T):
                    w_k = composite_potential(yk, graph, family, leader)
                    max_dv = max(max_dv, w_k - w_prev)
                    w_prev = w_k
                    record(tk, yk)
                    check_events(tk, yk)
                p, t = sol.y[:, -1].copy(), boundary
        else:
            step_count = 0
            w_prev = composite_potential(p, graph, family, leader)
            while boundary - t > 1e-12:
                h = min(dt, boundary - t)
                p_new = _rk4_step(rhs, t, p, h)
                if not np.all(np.isfinite(p_new)):
                    raise IntegrationError(
                        "state became non-finite (potential-domain blow-up?)",
                        time=t, last_state=p)
                p, t = p_new, t + h
                w_new = composite_potential(p, graph, family, leader)
                max_dv = max(max_dv, w_new - w_prev)
                w_prev = w_new
                step_count += 1
                if step_count % record_every == 0 or boundary - t <= 1e-12:
                    record(t, p)
                    check_events(t, p)
            t = boundary
        if ev_idx < len(schedule) and abs(schedule[ev_idx].time - boundary) < 1e-12:
            p = apply_perturbation(p, schedule[ev_idx], graph)
            log.append((boundary, "perturbation_applied"))
            eq_armed = True
            record(t, p)
            ev_idx += 1

    traj = Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        edge_errors=np.asarray(errors),
        grad_norms=np.asarray(gnorms),
        events=log,
        max_lyapunov_increase=float(max_dv),
        graph=graph,
    )
    return traj
