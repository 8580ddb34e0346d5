"""Receding-horizon planner of the inbound threat."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import optimizer
from .fields import risk_along
from .geometry import AnticipatedTrack, anticipate_line, los_angle, solve_intercept
from .optimizer import OcpProblem, OcpSolution
from .scenario import AgentState, ScenarioConfig


def it_candidate_eis(p_it, theta_atk: float, v_atk: float, ei_states: Sequence[AgentState],
                     r_pz: float, v_itc, ts: float, h: int) -> list[AnticipatedTrack]:
    """Anticipated intercept tracks of every proximal EI with a feasible heading.

    Each EI within ``r_pz`` is assumed to fly straight at its terminal
    speed along the collision heading against the threat's nominal attack
    line; EIs without such a heading are dropped.  ``v_itc`` may be a
    scalar or one speed per EI.
    """
    p_it = np.asarray(p_it, dtype=float)
    speeds = np.broadcast_to(np.asarray(v_itc, dtype=float), (len(ei_states),))
    tracks = []
    for st, vi in zip(ei_states, speeds):
        p = st.position
        if np.hypot(*(p - p_it)) > r_pz:
            continue
        sol = solve_intercept(p_it, p, theta_atk, v_atk, float(vi))
        if not sol.feasible:
            continue
        tracks.append(anticipate_line(p, sol.heading, float(vi), ts, h))
    return tracks


def build_it_problem(state: AgentState, ei_states: Sequence[AgentState],
                     cfg: ScenarioConfig) -> tuple[OcpProblem, list[AnticipatedTrack]]:
    it = cfg.it
    f = cfg.fields
    hva = cfg.hva_array
    theta_atk = los_angle(state.position, hva)
    tracks = it_candidate_eis(state.position, theta_atk, it.v_atk, ei_states, cfg.engagement.r_pz,
                              [ei.v_itc for ei in cfg.eis], it.step, it.horizon)
    track_arr = np.stack([t.positions for t in tracks]) if tracks else np.zeros((0, it.horizon + 1, 2))
    defenses = cfg.defenses_array
    m1, m2, m3, lam = it.m1, it.m2, it.m3, it.turn_penalty

    def stage(states, controls):
        a, w = controls[..., 0], controls[..., 1]
        rho = risk_along(states[..., :2], defenses, track_arr, f)
        return m1 * (a * a + lam * w * w) + m2 * rho

    def terminal(states):
        d = states[..., :2] - hva
        return m3 * (d[..., 0] ** 2 + d[..., 1] ** 2)

    problem = OcpProblem(
        initial=state,
        horizon=it.horizon,
        step=it.step,
        limits=it.limits,
        turn_penalty=lam,
        stage_cost=stage,
        terminal_cost=terminal,
        slack_weight=it.slack_weight,
    )
    return problem, tracks


def plan_it(state: AgentState, ei_states: Sequence[AgentState], cfg: ScenarioConfig,
            warm_start: np.ndarray | None = None) -> OcpSolution:
    """Solve the threat's problem for the current snapshot; apply ``first_control``."""
    problem, _ = build_it_problem(state, ei_states, cfg)
    return optimizer.solve(problem, warm_start)


def cumulative_risk(solution: OcpSolution, problem: OcpProblem) -> float:
    """Sum of predicted stage risk (without the energy term) over the horizon."""
    h = problem.horizon
    zero_u = np.zeros((h, 2))
    return float(problem.stage_cost(solution.states[:h], zero_u).sum())
