"""Command-node cycle: candidate set, per-EI terminal-intercept feasibility,
pursuit-proximity planning, and command dispatch."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import optimizer
from .fields import barrier_terms
from .geometry import AnticipatedTrack, anticipate_line, los_angle, terminal_heading
from .optimizer import OcpProblem, OcpSolution, TerminalBall, shift_controls
from .scenario import AgentState, EIParams, ScenarioConfig

log = logging.getLogger(__name__)


def candidate_set(p_it, ei_positions: Sequence, r_pz: float,
                  alive: Sequence[bool] | None = None) -> list[int]:
    """Indices of (alive) EIs inside the closed proximity ball around the threat."""
    p_it = np.asarray(p_it, dtype=float)
    out = []
    for i, p in enumerate(ei_positions):
        if alive is not None and not alive[i]:
            continue
        d = np.asarray(p, dtype=float) - p_it
        if float(np.hypot(d[0], d[1])) <= r_pz:
            out.append(i)
    return out


def cn_anticipate_it(p_it, p_hva, candidate_positions: Sequence, psi: float, v_atk: float,
                     ts: float, h: int) -> AnticipatedTrack:
    heading = terminal_heading(p_it, p_hva, candidate_positions, psi)
    return anticipate_line(p_it, heading, v_atk, ts, h)


def _separation_sq(states: np.ndarray, track_pts: np.ndarray) -> np.ndarray:
    d = states[..., :2] - track_pts
    return d[..., 0] ** 2 + d[..., 1] ** 2


def terminal_intercept_problem(ei_state: AgentState, track: AnticipatedTrack, ei: EIParams,
                               r_iz: float) -> OcpProblem:
    h = ei.horizon
    pts = track.positions[:h]

    def stage(states, controls):
        return _separation_sq(states, pts)

    return OcpProblem(
        initial=ei_state,
        horizon=h,
        step=ei.step,
        limits=ei.limits,
        turn_penalty=ei.turn_penalty,
        stage_cost=stage,
        terminal_cost=None,
        slack_weight=None,
        terminal_set=TerminalBall(tuple(track.positions[h]), r_iz),
    )


def solve_terminal_intercept(ei_state: AgentState, track: AnticipatedTrack, ei: EIParams,
                             r_iz: float, warm_start: np.ndarray | None = None) -> OcpSolution:
    """Slack-free proximity problem with the terminal ball around the track end.

    ``feasible`` on the result decides commitment.
    """
    return optimizer.solve(terminal_intercept_problem(ei_state, track, ei, r_iz), warm_start)


def pursuit_problem(ei_state: AgentState, track: AnticipatedTrack, ei: EIParams,
                    cfg: ScenarioConfig) -> OcpProblem:
    h = ei.horizon
    pts = track.positions[:h]
    f = cfg.fields
    hva = cfg.hva_array
    center = np.asarray(ei.patrol_center, dtype=float)
    mu1, mu2, mu3, kappa = ei.mu1, ei.mu2, ei.mu3, ei.turn_penalty

    def stage(states, controls):
        a, w = controls[..., 0], controls[..., 1]
        pac, htc = barrier_terms(states[..., :2], center, hva, f)
        return mu1 * (a * a + kappa * w * w) + mu2 * (pac + htc) + mu3 * _separation_sq(states, pts)

    return OcpProblem(
        initial=ei_state,
        horizon=h,
        step=ei.step,
        limits=ei.limits,
        turn_penalty=kappa,
        stage_cost=stage,
        slack_weight=ei.slack_weight,
    )


def solve_pursuit(indices: Sequence[int], ei_states: Sequence[AgentState], track: AnticipatedTrack,
                  cfg: ScenarioConfig,
                  warm_starts: Mapping[int, np.ndarray] | None = None) -> dict[int, OcpSolution]:
    """Per-EI pursuit solves; the joint objective has no cross terms, so it separates."""
    warm_starts = warm_starts or {}
    out = {}
    for i in sorted(indices):
        prob = pursuit_problem(ei_states[i], track, cfg.eis[i], cfg)
        out[i] = optimizer.solve(prob, warm_starts.get(i))
    return out


@dataclass
class WarmStartCache:
    """Last committed plan and control per EI, carried across CN cycles."""

    plans: dict[int, np.ndarray] = field(default_factory=dict)
    controls: dict[int, np.ndarray] = field(default_factory=dict)

    def warm(self, i: int) -> np.ndarray | None:
        plan = self.plans.get(i)
        return None if plan is None else shift_controls(plan)


@dataclass
class CnDecision:
    time: float
    alive: list[int]
    candidates: list[int]
    committed: dict[int, OcpSolution]
    pursuit: dict[int, OcpSolution]
    rejected: list[int]
    track: AnticipatedTrack
    controls: dict[int, np.ndarray]
    failures: list[int]
    warm_started: dict[int, bool]

    @property
    def intercept_committed(self) -> set[int]:
        return set(self.committed)

    @property
    def pursuit_assigned(self) -> set[int]:
        return set(self.pursuit)


def cn_decide(time: float, it_state: AgentState, ei_states: Sequence[AgentState], alive: Sequence[bool],
              cfg: ScenarioConfig, cache: WarmStartCache | None = None) -> CnDecision:
    """One command-node cycle.

    Candidates whose terminal problem has a feasible witness commit to
    intercept; the rest, and every non-candidate, pursue.  Every alive EI
    receives exactly one control.
    """
    cache = cache if cache is not None else WarmStartCache()
    eng = cfg.engagement
    p_it = it_state.position
    positions = [s.position for s in ei_states]
    alive_idx = [i for i in range(len(ei_states)) if alive[i]]
    cand = candidate_set(p_it, positions, eng.r_pz, alive)

    if cfg.eis:
        ts, h = cfg.eis[0].step, cfg.eis[0].horizon
    else:
        ts, h = cfg.it.step, cfg.it.horizon
    if cand:
        track = cn_anticipate_it(p_it, cfg.hva_array, [positions[i] for i in cand],
                                 cfg.fields.psi, cfg.it.v_atk, ts, h)
    else:
        # no candidates: no evasion heading exists, so the threat is anticipated on its attack line
        track = anticipate_line(p_it, los_angle(p_it, cfg.hva_array), cfg.it.v_atk, ts, h)

    committed: dict[int, OcpSolution] = {}
    rejected: list[int] = []
    warm_started: dict[int, bool] = {}
    for i in cand:
        ws = cache.warm(i)
        warm_started[i] = ws is not None
        sol = solve_terminal_intercept(ei_states[i], track, cfg.eis[i], eng.r_iz, ws)
        if sol.feasible:
            committed[i] = sol
        else:
            rejected.append(i)

    pursuers = [i for i in alive_idx if i not in committed]
    pursuit: dict[int, OcpSolution] = {}
    for i in pursuers:
        ws = cache.warm(i)
        warm_started[i] = ws is not None
        pursuit[i] = optimizer.solve(pursuit_problem(ei_states[i], track, cfg.eis[i], cfg), ws)

    controls: dict[int, np.ndarray] = {}
    failures: list[int] = []
    for i in alive_idx:
        sol = committed.get(i) or pursuit[i]
        if i in pursuit and not sol.converged and not sol.feasible:
            failures.append(i)
            log.info("pursuit planning failure for EI %d at t=%.3f (%s)", i, time, sol.status)
            controls[i] = cache.controls.get(i, np.zeros(2)).copy()
            cache.plans.pop(i, None)
        else:
            controls[i] = sol.first_control
            cache.plans[i] = sol.controls.copy()
        cache.controls[i] = controls[i].copy()

    return CnDecision(time=time, alive=alive_idx, candidates=cand, committed=committed,
                      pursuit=pursuit, rejected=rejected, track=track, controls=controls,
                      failures=failures, warm_started=warm_started)
