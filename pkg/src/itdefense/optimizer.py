"""Direct single-shooting solver for short-horizon unicycle control problems.

Decision variables are the controls only.  Speed-box slacks are eliminated
analytically: with a quadratic slack cost the optimal slack equals the
bound violation, so a one-sided quadratic penalty gives the same problem,
and the solution reports the recovered slacks.  Controls are kept in their
box by projection, and since speed is affine in the accelerations the
projection also clips accelerations in sequence so predicted speeds stay
in their box whenever the initial speed does; the speed penalty then only
acts on out-of-box initial states.  Constraints that carry no slack
(terminal energy, terminal ball) are realized as steep penalties and
judged by the feasibility verdict.

The minimizer is projected gradient descent in box-normalized coordinates
with Barzilai-Borwein trial steps and monotone Armijo backtracking; gradients are central finite
differences evaluated as one vectorized batch of rollouts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import rollout
from .scenario import AgentState, Limits

log = logging.getLogger(__name__)

StageCost = Callable[[np.ndarray, np.ndarray], np.ndarray]
TerminalCost = Callable[[np.ndarray], np.ndarray]


class InvalidProblem(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 500
    grad_tol: float = 1e-6
    shrink: float = 0.5
    armijo_c: float = 1e-4
    fd_rel: float = 1e-6
    slack_tol: float = 1e-6
    max_backtracks: int = 50
    # continuation for slack-free penalties
    penalty_rounds: int = 3
    penalty_growth: float = 100.0
    bb_min: float = 1e-12
    bb_max: float = 1e12


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class TerminalBall:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class OcpProblem:
    """One receding-horizon instance.

    ``stage_cost(states, controls)`` receives states of shape (..., h, 4)
    (steps 0..h-1) and controls (..., h, 2) and returns per-step costs
    (..., h); the solver multiplies by the step.  ``terminal_cost`` receives
    the (..., 4) terminal states.  ``slack_weight=None`` marks a slack-free
    problem: every violation is weighted by the hard penalty weight.
    """

    initial: AgentState
    horizon: int
    step: float
    limits: Limits
    turn_penalty: float
    stage_cost: StageCost
    terminal_cost: Optional[TerminalCost] = None
    slack_weight: Optional[float] = 1.0
    terminal_set: Optional[TerminalBall] = None
    hard_weight: float = 1e4
    options: SolverOptions = DEFAULT_OPTIONS

    @property
    def n_vars(self) -> int:
        return 2 * self.horizon

    def energy_weight(self, hard_weight: float) -> float:
        """Energy-budget penalty weight; grows with the continuation weight."""
        if self.slack_weight is None:
            return hard_weight
        return 1e6 * self.slack_weight * (hard_weight / self.hard_weight)


@dataclass
class OcpSolution:
    controls: np.ndarray          # (h, 2)
    states: np.ndarray            # (h+1, 4)
    energy: np.ndarray            # (h+1,)
    stage_slack: np.ndarray       # (h,) speed slack at steps 0..h-1
    terminal_slack: float         # speed slack at step h
    terminal_violation: float     # distance outside the terminal ball
    energy_violation: float       # max(0, -e_h)
    objective: float
    start_objective: float
    feasible: bool
    converged: bool
    iterations: int
    status: str
    breakdown: dict = field(default_factory=dict)

    @property
    def first_control(self) -> np.ndarray:
        return self.controls[0].copy()

    @property
    def max_slack(self) -> float:
        return float(max(np.max(self.stage_slack, initial=0.0), self.terminal_slack))


def finite_diff_gradient(objective: Callable, point, h_fd: float | None = None,
                         vectorized: bool = False) -> np.ndarray:
    """Central-difference gradient.

    With ``vectorized=True`` the objective takes an (m, n) batch and
    returns (m,) values, and all 2n probes are evaluated in one call.
    """
    x = np.asarray(point, dtype=float).ravel()
    n = x.size
    if h_fd is None:
        h_fd = 1e-6 * (1.0 + float(np.max(np.abs(x), initial=0.0)))
    if h_fd <= 0:
        raise ValueError("finite-difference step must be positive")
    eye = np.eye(n) * h_fd
    if vectorized:
        vals = np.asarray(objective(np.vstack([x + eye, x - eye])), dtype=float)
        return (vals[:n] - vals[n:]) / (2.0 * h_fd)
    g = np.empty(n)
    for i in range(n):
        g[i] = (objective(x + eye[i]) - objective(x - eye[i])) / (2.0 * h_fd)
    return g


def speed_slack(v: np.ndarray, limits: Limits) -> np.ndarray:
    return np.maximum(limits.v_min - v, 0.0) + np.maximum(v - limits.v_max, 0.0)


def shift_controls(controls: np.ndarray) -> np.ndarray:
    """Receding-horizon warm start: drop the first control, repeat the last."""
    c = np.asarray(controls, dtype=float)
    return np.concatenate([c[1:], c[-1:]], axis=0)


class _Transcription:
    """Penalty-transcribed objective over flattened control vectors."""

    def __init__(self, problem: OcpProblem, hard_weight: float):
        self.p = problem
        self.hard_weight = hard_weight
        lim = problem.limits
        self.lo = np.tile(lim.control_lo, problem.horizon)
        self.hi = np.tile(lim.control_hi, problem.horizon)

    def terms(self, X: np.ndarray) -> dict:
        p = self.p
        h, ts = p.horizon, p.step
        U = X.reshape(X.shape[:-1] + (h, 2))
        states, energy = rollout(p.initial, U, ts, p.turn_penalty)
        stage = ts * p.stage_cost(states[..., :h, :], U).sum(axis=-1)
        terminal = p.terminal_cost(states[..., h, :]) if p.terminal_cost else np.zeros(X.shape[:-1])
        slack = speed_slack(states[..., 2], p.limits)
        sw = p.slack_weight if p.slack_weight is not None else self.hard_weight
        slack_pen = sw * (ts * (slack[..., :h] ** 2).sum(axis=-1) + slack[..., h] ** 2)
        e_viol = np.maximum(-energy[..., h], 0.0)
        hard_pen = p.energy_weight(self.hard_weight) * e_viol ** 2
        if p.terminal_set is not None:
            d = states[..., h, :2] - np.asarray(p.terminal_set.center)
            t_viol = np.maximum(np.hypot(d[..., 0], d[..., 1]) - p.terminal_set.radius, 0.0)
            hard_pen = hard_pen + self.hard_weight * t_viol ** 2
        else:
            t_viol = np.zeros(X.shape[:-1])
        total = stage + terminal + slack_pen + hard_pen
        return dict(total=total, stage=stage, terminal=terminal, slack_penalty=slack_pen,
                    hard_penalty=hard_pen, states=states, energy=energy, slack=slack,
                    terminal_violation=t_viol, energy_violation=e_viol, controls=U)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.terms(X)["total"]

    def value(self, x: np.ndarray) -> float:
        return float(self(x[None, :])[0])

    def project(self, x: np.ndarray) -> np.ndarray:
        y = np.clip(x, self.lo, self.hi)
        # keep every predicted speed inside the box by clipping accelerations in order
        lim, ts = self.p.limits, self.p.step
        v = self.p.initial.v
        for k in range(self.p.horizon):
            a = y[2 * k]
            a = min(a, (lim.v_max - v) / ts)
            a = max(a, (lim.v_min - v) / ts)
            a = min(max(a, lim.a_min), lim.a_max)
            y[2 * k] = a
            v = v + ts * a
        return y


def _projected_gradient_norm(obj: _Transcription, x: np.ndarray, g: np.ndarray,
                             scale: np.ndarray) -> float:
    """Norm of the gradient restricted to directions not blocked by active bounds.

    A probe step of 0.1% of each box width is projected; components the
    projection cuts off count as blocked.
    """
    gmax = float(np.max(np.abs(scale * g)))
    if gmax == 0.0:
        return 0.0
    t = 1e-3 / gmax
    metric = scale * scale
    moved = obj.project(x - t * metric * g) - x
    return float(np.linalg.norm(moved / (t * metric)))


def _minimize(obj: _Transcription, x0: np.ndarray, opts: SolverOptions):
    x = obj.project(x0.copy())
    f = obj.value(x)

    def grad(z):
        return finite_diff_gradient(obj, z, opts.fd_rel * (1.0 + float(np.max(np.abs(z)))),
                                    vectorized=True)

    # diagonal metric: steps are taken in box-normalized coordinates
    scale = np.where(obj.hi > obj.lo, obj.hi - obj.lo, 1.0)
    metric = scale * scale
    g = grad(x)
    alpha = 1.0 / max(1.0, float(np.max(np.abs(scale * g))))
    status = "max_iter"
    converged = False
    it = 0
    for it in range(opts.max_iter + 1):
        if _projected_gradient_norm(obj, x, g, scale) <= opts.grad_tol * (1.0 + abs(f)):
            converged, status = True, "converged"
            break
        if it == opts.max_iter:
            break
        step = alpha
        accepted = False
        for _ in range(opts.max_backtracks):
            xn = obj.project(x - step * metric * g)
            d = xn - x
            fn = obj.value(xn)
            if fn <= f + opts.armijo_c * float(g @ d) and fn <= f:
                accepted = True
                break
            step *= opts.shrink
        if not accepted or not np.any(d):
            status = "line_search_stalled"
            break
        gn = grad(xn)
        s, y = (xn - x) / scale, (gn - g) * scale
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 0 else opts.bb_max
        alpha = min(max(alpha, opts.bb_min), opts.bb_max)
        x, f, g = xn, fn, gn
    return x, f, converged, it, status


def solve(problem: OcpProblem, warm_start: np.ndarray | None = None) -> OcpSolution:
    """Locally minimize the transcribed objective from a warm start (zeros if absent)."""
    h = problem.horizon
    if not (isinstance(h, int) and h >= 1) or not problem.step > 0:
        raise InvalidProblem("horizon must be >= 1 and step > 0")
    lim = problem.limits
    if lim.a_min > lim.a_max or lim.omega_min > lim.omega_max or lim.v_min > lim.v_max:
        raise InvalidProblem("empty control or speed box")
    if warm_start is None:
        x0 = np.zeros(2 * h)
    else:
        x0 = np.asarray(warm_start, dtype=float).reshape(-1)
        if x0.size != 2 * h:
            raise InvalidProblem(f"warm start has {x0.size} entries, expected {2 * h}")
    if not np.all(np.isfinite(x0)):
        raise InvalidProblem("warm start is not finite")

    opts = problem.options
    weight = problem.hard_weight
    x = x0
    iterations = 0
    rounds = opts.penalty_rounds
    prev_viol = np.inf
    for r in range(rounds + 1):
        obj = _Transcription(problem, weight)
        x, f, converged, it, status = _minimize(obj, x, opts)
        iterations += it
        terms = obj.terms(x[None, :])
        hard_viol = max(float(terms["terminal_violation"][0]), float(terms["energy_violation"][0]))
        # a penalty-induced violation shrinks with the weight; a reachability gap does not
        if r == rounds or hard_viol <= opts.slack_tol or hard_viol > 0.5 * prev_viol:
            break
        prev_viol = hard_viol
        weight *= opts.penalty_growth

    start_obj = obj.value(obj.project(x0.copy()))
    if f > start_obj:
        # later penalty rounds re-weight the objective; never return worse than the start
        x = obj.project(x0.copy())
        f = start_obj
        status = "start_retained"
        terms = obj.terms(x[None, :])

    slack = terms["slack"][0]
    stage_slack = slack[:h].copy()
    terminal_slack = float(slack[h])
    t_viol = float(terms["terminal_violation"][0])
    e_viol = float(terms["energy_violation"][0])
    feasible = (max(np.max(stage_slack), terminal_slack) <= opts.slack_tol
                and t_viol <= opts.slack_tol and e_viol <= opts.slack_tol)
    if not converged:
        log.debug("solver stopped without convergence: %s after %d iterations", status, iterations)
    return OcpSolution(
        controls=terms["controls"][0].copy(),
        states=terms["states"][0].copy(),
        energy=terms["energy"][0].copy(),
        stage_slack=stage_slack,
        terminal_slack=terminal_slack,
        terminal_violation=t_viol,
        energy_violation=e_viol,
        objective=f,
        start_objective=start_obj,
        feasible=bool(feasible),
        converged=converged,
        iterations=iterations,
        status=status,
        breakdown={k: float(terms[k][0]) for k in ("stage", "terminal", "slack_penalty", "hard_penalty")},
    )


def evaluate(problem: OcpProblem, controls: np.ndarray) -> float:
    """Transcribed objective of a control sequence at the base penalty weight."""
    obj = _Transcription(problem, problem.hard_weight)
    return obj.value(np.asarray(controls, dtype=float).reshape(-1))
