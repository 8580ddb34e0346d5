"""Master simulation loop, event detection, and outcome classification.

All agents integrate on the fine master step.  The threat replans on its
own grid and the command node on the EI grid; between decision points the
committed controls are held.  Zone entries and energy depletion are
monitored after every fine step with linearly interpolated crossing times.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import optimizer
from .cn_planner import CnDecision, WarmStartCache, cn_decide
from .dynamics import ZERO, Control, energy_rate, energy_step, unicycle_step
from .it_planner import build_it_problem
from .optimizer import shift_controls
from .scenario import AgentState, ScenarioConfig

log = logging.getLogger(__name__)

IZ_ENTRY = "iz_entry"
DZ_ENTRY = "dz_entry"
IT_DEPLETED = "it_depleted"
EI_DEPLETED = "ei_depleted"
PLANNING_FAILURE = "planning_failure"
TIMEOUT = "timeout"

EVENT_KINDS = (IZ_ENTRY, DZ_ENTRY, IT_DEPLETED, EI_DEPLETED, PLANNING_FAILURE, TIMEOUT)


def ei_name(i: int) -> str:
    return f"ei{i}"


@dataclass(frozen=True)
class World:
    """Snapshot at time t plus the controls committed for [t, t + dt)."""

    t: float
    it: AgentState
    eis: tuple[AgentState, ...]
    it_control: Control = ZERO
    ei_controls: tuple[Control, ...] = ()


@dataclass(frozen=True)
class EngagementEvent:
    kind: str
    time: float
    agent: Optional[str]
    x: float
    y: float

    def is_terminal(self, ballistic_depletion: bool = False) -> bool:
        if self.kind == IT_DEPLETED:
            return not ballistic_depletion
        return self.kind in (IZ_ENTRY, DZ_ENTRY, TIMEOUT)


@dataclass(frozen=True)
class Outcome:
    it: str
    ei: str
    hva: str
    decided_by: str
    time: float
    agent: Optional[str] = None


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    agent: str
    x: float
    y: float
    v: float
    theta: float
    e: float
    mode: str
    a: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class SolveRecord:
    t: float
    agent: str
    kind: str  # "it", "intercept" or "pursuit"
    objective: float
    start_objective: float
    warm_started: bool
    converged: bool
    feasible: bool
    iterations: int


@dataclass
class EngagementResult:
    outcome: Outcome
    events: list[EngagementEvent]
    trajectory: list[TrajectorySample]
    solves: list[SolveRecord] = field(default_factory=list)
    cn_log: list[CnDecision] = field(default_factory=list)

    def agent_samples(self, agent: str) -> list[TrajectorySample]:
        return [s for s in self.trajectory if s.agent == agent]

    def energy_history(self, agent: str) -> np.ndarray:
        return np.array([s.e for s in self.trajectory if s.agent == agent])

    @property
    def agents(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.trajectory:
            seen.setdefault(s.agent, None)
        return list(seen)

    def terminal_energies(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for s in self.trajectory:
            out[s.agent] = s.e
        return out


# --------------------------------------------------------------------------
# events

def _crossing_fraction(f0: float, f1: float) -> float:
    """Fraction of the step at which a linearly interpolated f reaches zero."""
    if f0 <= 0.0:
        return 0.0
    return f0 / (f0 - f1)


def _lerp(p0: AgentState, p1: AgentState, s: float) -> tuple[float, float]:
    return (p0.x + s * (p1.x - p0.x), p0.y + s * (p1.y - p0.y))


def detect_events(prev: World, nxt: World, cfg: ScenarioConfig) -> list[EngagementEvent]:
    """Boundary crossings between two snapshots one fine step apart, time-ordered."""
    eng = cfg.engagement
    dt = nxt.t - prev.t
    events: list[EngagementEvent] = []
    hva = cfg.hva

    f0 = math.hypot(prev.it.x - hva[0], prev.it.y - hva[1]) - eng.r_dz
    f1 = math.hypot(nxt.it.x - hva[0], nxt.it.y - hva[1]) - eng.r_dz
    if f0 > 0.0 >= f1:
        s = _crossing_fraction(f0, f1)
        events.append(EngagementEvent(DZ_ENTRY, prev.t + s * dt, "it", *_lerp(prev.it, nxt.it, s)))

    for i, (e0, e1) in enumerate(zip(prev.eis, nxt.eis)):
        g0 = math.hypot(prev.it.x - e0.x, prev.it.y - e0.y) - eng.r_iz
        g1 = math.hypot(nxt.it.x - e1.x, nxt.it.y - e1.y) - eng.r_iz
        if g0 > 0.0 >= g1:
            s = _crossing_fraction(g0, g1)
            events.append(EngagementEvent(IZ_ENTRY, prev.t + s * dt, ei_name(i), *_lerp(prev.it, nxt.it, s)))

    def depletion_time(e_prev: float, u: Control, pen: float) -> float:
        rate = energy_rate(u, pen)
        return prev.t + (min(dt, e_prev / rate) if rate > 0 else dt)

    if prev.it.energy > 0.0 >= nxt.it.energy:
        t = depletion_time(prev.it.energy, prev.it_control, cfg.it.turn_penalty)
        s = (t - prev.t) / dt if dt > 0 else 1.0
        events.append(EngagementEvent(IT_DEPLETED, t, "it", *_lerp(prev.it, nxt.it, s)))
    for i, (e0, e1) in enumerate(zip(prev.eis, nxt.eis)):
        if e0.energy > 0.0 >= e1.energy:
            u = prev.ei_controls[i] if i < len(prev.ei_controls) else ZERO
            t = depletion_time(e0.energy, u, cfg.eis[i].turn_penalty)
            s = (t - prev.t) / dt if dt > 0 else 1.0
            events.append(EngagementEvent(EI_DEPLETED, t, ei_name(i), *_lerp(e0, e1, s)))

    events.sort(key=lambda ev: ev.time)
    return events


def initial_events(world: World, cfg: ScenarioConfig) -> list[EngagementEvent]:
    """Zone containment already true at t = 0."""
    eng = cfg.engagement
    out = []
    it = world.it
    for i, e in enumerate(world.eis):
        if math.hypot(it.x - e.x, it.y - e.y) <= eng.r_iz:
            out.append(EngagementEvent(IZ_ENTRY, world.t, ei_name(i), it.x, it.y))
    if math.hypot(it.x - cfg.hva[0], it.y - cfg.hva[1]) <= eng.r_dz:
        out.append(EngagementEvent(DZ_ENTRY, world.t, "it", it.x, it.y))
    return out


def classify(events: list[EngagementEvent], ballistic_depletion: bool = False) -> Outcome:
    """The first terminal event decides the outcome."""
    for ev in events:
        if not ev.is_terminal(ballistic_depletion):
            continue
        if ev.kind == DZ_ENTRY:
            return Outcome("success", "failure", "lost", ev.kind, ev.time, ev.agent)
        if ev.kind in (IZ_ENTRY, IT_DEPLETED):
            return Outcome("failure", "success", "held", ev.kind, ev.time, ev.agent)
        # timeout: the threat was denied access without being neutralized
        return Outcome("failure", "success", "held", ev.kind, ev.time, ev.agent)
    raise ValueError("event list contains no terminal event")


# --------------------------------------------------------------------------
# master loop

def _grid_ratio(step: float, dt: float) -> int:
    return max(1, int(round(step / dt)))


def _clip_control(u: np.ndarray, lim) -> Control:
    return Control(float(np.clip(u[0], lim.a_min, lim.a_max)),
                   float(np.clip(u[1], lim.omega_min, lim.omega_max)))


def run(cfg: ScenarioConfig) -> EngagementResult:
    """Simulate one engagement to its first terminal event or timeout."""
    eng = cfg.engagement
    dt = eng.master_step
    ballistic = eng.ballistic_depletion
    it_every = _grid_ratio(cfg.it.step, dt)
    cn_every = _grid_ratio(cfg.eis[0].step, dt) if cfg.eis else 0
    n_steps_max = int(math.ceil(eng.max_time / dt - 1e-9))

    it_state = cfg.it.initial
    ei_states = [ei.initial for ei in cfg.eis]
    it_u = ZERO
    ei_u = [ZERO for _ in cfg.eis]
    ei_mode = ["ei_pursuit" for _ in cfg.eis]
    it_plan: np.ndarray | None = None
    cache = WarmStartCache()

    events: list[EngagementEvent] = []
    trajectory: list[TrajectorySample] = []
    solves: list[SolveRecord] = []
    cn_log: list[CnDecision] = []

    world = World(0.0, it_state, tuple(ei_states))
    events.extend(initial_events(world, cfg))
    done = any(ev.is_terminal(ballistic) for ev in events)

    def it_mode() -> str:
        return "it" if it_state.energy > 0.0 else "coast"

    def record(t: float, last: bool = False) -> None:
        u = ZERO if last else it_u
        trajectory.append(TrajectorySample(t, "it", it_state.x, it_state.y, it_state.v, it_state.theta,
                                           it_state.energy, it_mode(), u.a, u.omega))
        for i, st in enumerate(ei_states):
            ui = ZERO if last else ei_u[i]
            mode = ei_mode[i] if st.energy > 0.0 else "coast"
            trajectory.append(TrajectorySample(t, ei_name(i), st.x, st.y, st.v, st.theta, st.energy,
                                               mode, ui.a, ui.omega))

    n = 0
    while not done:
        t = n * dt
        if n % it_every == 0 and it_state.energy > 0.0:
            problem, _ = build_it_problem(it_state, ei_states, cfg)
            warm = None if it_plan is None else shift_controls(it_plan)
            sol = optimizer.solve(problem, warm)
            solves.append(SolveRecord(t, "it", "it", sol.objective, sol.start_objective, warm is not None,
                                      sol.converged, sol.feasible, sol.iterations))
            if not sol.converged and not sol.feasible:
                events.append(EngagementEvent(PLANNING_FAILURE, t, "it", it_state.x, it_state.y))
                it_plan = None
            else:
                it_u = _clip_control(sol.first_control, cfg.it.limits)
                it_plan = sol.controls
        if cn_every and n % cn_every == 0:
            alive = [st.energy > 0.0 for st in ei_states]
            dec = cn_decide(t, it_state, ei_states, alive, cfg, cache)
            cn_log.append(dec)
            for i in dec.alive:
                ei_u[i] = _clip_control(dec.controls[i], cfg.eis[i].limits)
                ei_mode[i] = "ei_intercept" if i in dec.committed else "ei_pursuit"
                kind = "intercept" if i in dec.committed else "pursuit"
                sol = dec.committed.get(i) or dec.pursuit[i]
                solves.append(SolveRecord(t, ei_name(i), kind, sol.objective, sol.start_objective,
                                          dec.warm_started.get(i, False), sol.converged, sol.feasible,
                                          sol.iterations))
            for i in dec.failures:
                events.append(EngagementEvent(PLANNING_FAILURE, t, ei_name(i), ei_states[i].x, ei_states[i].y))

        # depleted agents cannot maneuver
        if it_state.energy <= 0.0:
            it_u = ZERO
        for i, st in enumerate(ei_states):
            if st.energy <= 0.0:
                ei_u[i] = ZERO

        record(t)
        prev = World(t, it_state, tuple(ei_states), it_u, tuple(ei_u))

        lim = cfg.it.limits
        e_new, _ = energy_step(it_state.energy, it_u, cfg.it.turn_penalty, dt)
        it_state = replace(unicycle_step(it_state, it_u, dt, (lim.v_min, lim.v_max)), energy=e_new)
        for i, st in enumerate(ei_states):
            p = cfg.eis[i]
            e_new, _ = energy_step(st.energy, ei_u[i], p.turn_penalty, dt)
            ei_states[i] = replace(unicycle_step(st, ei_u[i], dt, (p.limits.v_min, p.limits.v_max)),
                                   energy=e_new)

        n += 1
        nxt = World(n * dt, it_state, tuple(ei_states))
        step_events = detect_events(prev, nxt, cfg)
        events.extend(step_events)
        if any(ev.is_terminal(ballistic) for ev in step_events):
            done = True
        elif n >= n_steps_max:
            events.append(EngagementEvent(TIMEOUT, n * dt, None, it_state.x, it_state.y))
            done = True

    record(n * dt, last=True)
    events.sort(key=lambda ev: ev.time)
    return EngagementResult(
        outcome=classify(events, ballistic),
        events=events,
        trajectory=trajectory,
        solves=solves,
        cn_log=cn_log,
    )
