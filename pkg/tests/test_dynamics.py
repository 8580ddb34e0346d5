import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itdefense.dynamics import Control, energy_step, rollout, unicycle_step
from itdefense.scenario import AgentState


def s(x=0.0, y=0.0, v=1.0, th=0.0, e=10.0):
    return AgentState(x, y, v, th, e)


def test_straight_line():
    out = unicycle_step(s(), Control(), 0.1)
    assert (out.x, out.y, out.v, out.theta) == (0.1, 0.0, 1.0, 0.0)


def test_axis_symmetry():
    out = unicycle_step(s(th=math.pi / 2), Control(), 0.1)
    assert out.x == pytest.approx(0.0, abs=1e-15)
    assert out.y == pytest.approx(0.1)
    assert out.theta == math.pi / 2


def test_speed_clamp():
    # Euler uses the pre-step speed and heading for position
    out = unicycle_step(s(), Control(1.0, 1.0), 0.5, v_box=(0.1, 1.2))
    assert out.v == 1.2
    assert out.theta == 0.5
    assert (out.x, out.y) == (0.5, 0.0)


def test_energy_untouched_by_plant():
    assert unicycle_step(s(e=3.0), Control(1.0, 1.0), 0.5).energy == 3.0


def test_energy_coasting():
    assert energy_step(1.0, Control(), 2.0, 0.1) == (1.0, False)


def test_energy_formula():
    e, dep = energy_step(1.0, Control(0.3, 0.1), 2.0, 0.1)
    assert e == pytest.approx(0.989, abs=1e-15)
    assert not dep


def test_energy_depletion():
    assert energy_step(0.0005, Control(1.0, 0.0), 0.0, 0.1) == (0.0, True)


def test_rollout_straight():
    states, energy = rollout(s(), np.zeros((2, 2)), 1.0, 5.0)
    np.testing.assert_array_equal(states[:, :2], [[0, 0], [1, 0], [2, 0]])
    np.testing.assert_array_equal(energy, [10.0, 10.0, 10.0])


controls = st.lists(st.tuples(st.floats(-3, 3), st.floats(-1, 1)), min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(controls, st.floats(0.01, 1.0), st.floats(0.0, 50.0))
def test_rollout_matches_step_recursion(us, ts, pen):
    u = np.array(us, dtype=float)
    init = s(3.0, -2.0, 5.0, 0.7, 40.0)
    states, energy = rollout(init, u, ts, pen)
    assert states.shape == (len(us) + 1, 4)
    cur, e = init, init.energy
    for k, (a, w) in enumerate(us):
        np.testing.assert_array_equal(states[k], cur.as_array())
        assert energy[k] == e
        cur = unicycle_step(cur, Control(a, w), ts)
        e = e - ts * (a * a + pen * w * w)
    np.testing.assert_array_equal(states[-1], cur.as_array())
    assert energy[-1] == pytest.approx(e, abs=1e-12)


def test_rollout_batched_matches_single():
    rng = np.random.default_rng(3)
    u = rng.normal(size=(5, 7, 2))
    batch, be = rollout(s(), u, 0.2, 3.0)
    for i in range(5):
        one, oe = rollout(s(), u[i], 0.2, 3.0)
        np.testing.assert_array_equal(batch[i], one)
        np.testing.assert_array_equal(be[i], oe)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 100), st.floats(-5, 5), st.floats(-2, 2), st.floats(0, 100), st.floats(0.001, 1))
def test_energy_monotone(e, a, w, pen, ts):
    e2, dep = energy_step(e, Control(a, w), pen, ts)
    assert 0.0 <= e2 <= e
    assert dep == (e - ts * (a * a + pen * w * w) < 0)
