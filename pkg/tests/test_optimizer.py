import numpy as np
import pytest

from itdefense.optimizer import (
    InvalidProblem,
    OcpProblem,
    TerminalBall,
    evaluate,
    finite_diff_gradient,
    shift_controls,
    solve,
)
from itdefense.scenario import AgentState, Limits

WIDE = Limits(v_min=0.1, v_max=100.0, a_min=-50.0, a_max=50.0, omega_min=-50.0, omega_max=50.0)


def energy_stage(lam):
    def stage(states, controls):
        return controls[..., 0] ** 2 + lam * controls[..., 1] ** 2
    return stage


def test_fd_quadratic():
    g = finite_diff_gradient(lambda u: float(u @ u), np.array([1.0, 2.0]))
    np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-6)


def test_fd_constant():
    np.testing.assert_array_equal(finite_diff_gradient(lambda u: 3.0, np.zeros(4)), np.zeros(4))


def test_fd_vectorized_matches_scalar():
    f = lambda X: np.sin(X).sum(axis=-1) + (X ** 3).sum(axis=-1)  # noqa: E731
    x = np.array([0.3, -1.2, 2.0])
    a = finite_diff_gradient(lambda u: float(f(u)), x)
    b = finite_diff_gradient(f, x, vectorized=True)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_one_step_closed_form():
    # J = ts(a^2 + lam w^2) + (v1 - v*)^2 + (th1 - th*)^2 with v1 = v0 + ts a, th1 = th0 + ts w
    ts, lam, v0, th0, vs, ths = 0.5, 3.0, 5.0, 0.2, 8.0, 1.1
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, v0, th0, 1e6), horizon=1, step=ts, limits=WIDE, turn_penalty=lam,
        stage_cost=energy_stage(lam),
        terminal_cost=lambda s: (s[..., 2] - vs) ** 2 + (s[..., 3] - ths) ** 2,
    )
    sol = solve(prob)
    a_star = (vs - v0) / (1 + ts)
    w_star = (ths - th0) / (lam + ts)
    np.testing.assert_allclose(sol.first_control, [a_star, w_star], atol=1e-4)
    assert sol.converged and sol.feasible

    again = solve(prob, np.array([[a_star, w_star]]))
    assert again.iterations <= 2
    assert again.objective == pytest.approx(evaluate(prob, np.array([[a_star, w_star]])), abs=1e-10)


def test_unreachable_terminal_ball():
    ts, h, vmax = 0.5, 4, 10.0
    lim = Limits(1.0, vmax, -2.0, 2.0, -0.5, 0.5)
    reach = h * ts * vmax
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, 5.0, 0.0, 1e6), horizon=h, step=ts, limits=lim, turn_penalty=1.0,
        stage_cost=energy_stage(1.0), slack_weight=None,
        terminal_set=TerminalBall((3 * reach, 0.0), 1.0),
    )
    sol = solve(prob)
    assert not sol.feasible
    # terminal violation at least the reachability gap
    assert sol.terminal_violation >= 3 * reach - reach - 1.0 - 1e-9


def test_reachable_terminal_ball():
    lim = Limits(1.0, 10.0, -2.0, 2.0, -0.5, 0.5)
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, 5.0, 0.0, 1e6), horizon=4, step=0.5, limits=lim, turn_penalty=1.0,
        stage_cost=energy_stage(1.0), slack_weight=None,
        terminal_set=TerminalBall((12.0, 1.0), 0.5),
    )
    sol = solve(prob)
    assert sol.feasible
    assert np.hypot(*(sol.states[-1, :2] - [12.0, 1.0])) <= 0.5 + 1e-6


def test_controls_respect_box_and_speed():
    lim = Limits(2.0, 6.0, -1.0, 1.0, -0.2, 0.2)
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, 5.0, 0.0, 1e6), horizon=6, step=0.5, limits=lim, turn_penalty=1.0,
        stage_cost=lambda s, u: -(s[..., 2]) * 10.0,  # rewards speed: presses on v_max
    )
    sol = solve(prob)
    assert np.all(sol.controls[:, 0] <= 1.0 + 1e-12)
    assert np.all(np.abs(sol.controls[:, 1]) <= 0.2 + 1e-12)
    assert np.all(sol.states[:, 2] <= 6.0 + 1e-9)
    assert sol.max_slack == 0.0
    assert sol.feasible


def test_energy_budget_respected():
    lim = Limits(1.0, 50.0, -5.0, 5.0, -1.0, 1.0)
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, 5.0, 0.0, 0.5), horizon=5, step=0.5, limits=lim, turn_penalty=1.0,
        stage_cost=lambda s, u: 0.0 * u[..., 0],
        terminal_cost=lambda s: -10.0 * s[..., 2],
    )
    sol = solve(prob)
    assert sol.energy[-1] >= -1e-6
    assert sol.energy_violation <= 1e-6


def test_descent_from_warm_start():
    rng = np.random.default_rng(0)
    lim = Limits(1.0, 20.0, -3.0, 3.0, -0.5, 0.5)
    prob = OcpProblem(
        initial=AgentState(0.0, 0.0, 5.0, 0.0, 1e6), horizon=8, step=0.5, limits=lim, turn_penalty=2.0,
        stage_cost=energy_stage(2.0),
        terminal_cost=lambda s: (s[..., 0] - 30.0) ** 2 + (s[..., 1] - 10.0) ** 2,
    )
    for _ in range(5):
        warm = rng.uniform([-3, -0.5], [3, 0.5], size=(8, 2))
        sol = solve(prob, warm)
        assert sol.objective <= sol.start_objective


def test_shift_controls():
    u = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(shift_controls(u), [[2, 3], [4, 5], [4, 5]])


def test_invalid_problem():
    bad = Limits(5.0, 1.0, -1.0, 1.0, -1.0, 1.0)
    with pytest.raises(InvalidProblem):
        solve(OcpProblem(AgentState(0, 0, 1, 0, 1), 3, 0.1, bad, 1.0, energy_stage(1.0)))
    with pytest.raises(InvalidProblem):
        solve(OcpProblem(AgentState(0, 0, 1, 0, 1), 3, 0.1, WIDE, 1.0, energy_stage(1.0)), np.zeros(4))
