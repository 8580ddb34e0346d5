"""Forward-Euler unicycle and energy propagation.

The plant step (``unicycle_step``) saturates speed; the prediction rollout
(``rollout``) does not, so planners see speed violations as slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .scenario import AgentState


@dataclass(frozen=True)
class Control:
    a: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.omega])

    @classmethod
    def from_array(cls, u) -> Control:
        return cls(float(u[0]), float(u[1]))


ZERO = Control()


def unicycle_step(state: AgentState, u: Control, ts: float,
                  v_box: tuple[float, float] | None = None) -> AgentState:
    """Advance position, speed, heading by one Euler step; energy is untouched."""
    v = state.v + ts * u.a
    if v_box is not None:
        v = min(max(v, v_box[0]), v_box[1])
    return replace(
        state,
        x=state.x + ts * state.v * math.cos(state.theta),
        y=state.y + ts * state.v * math.sin(state.theta),
        v=v,
        theta=state.theta + ts * u.omega,
    )


def energy_rate(u: Control, turn_penalty: float) -> float:
    return u.a * u.a + turn_penalty * u.omega * u.omega


def energy_step(e: float, u: Control, turn_penalty: float, ts: float) -> tuple[float, bool]:
    """Return (new energy, depleted).  Energy is floored at zero."""
    raw = e - ts * energy_rate(u, turn_penalty)
    if raw < 0.0:
        return 0.0, True
    return raw, False


def rollout(initial: AgentState, controls: np.ndarray, ts: float,
            turn_penalty: float) -> tuple[np.ndarray, np.ndarray]:
    """Predict states and energy for one or many control sequences.

    ``controls`` has shape (..., h, 2).  Returns ``states`` of shape
    (..., h+1, 4) holding (x, y, v, theta) and ``energy`` of shape (..., h+1).
    Speed is not clamped and energy may go negative.  Running sums start
    from the initial value, so the result matches the step-by-step Euler
    recursion exactly.
    """
    controls = np.asarray(controls, dtype=float)
    batch = controls.shape[:-2]
    h = controls.shape[-2]
    a = controls[..., 0]
    w = controls[..., 1]

    def accumulate(x0: float, increments: np.ndarray) -> np.ndarray:
        buf = np.empty(batch + (h + 1,))
        buf[..., 0] = x0
        buf[..., 1:] = increments
        return np.cumsum(buf, axis=-1)

    v = accumulate(initial.v, ts * a)
    th = accumulate(initial.theta, ts * w)
    x = accumulate(initial.x, ts * v[..., :h] * np.cos(th[..., :h]))
    y = accumulate(initial.y, ts * v[..., :h] * np.sin(th[..., :h]))
    states = np.stack([x, y, v, th], axis=-1)
    energy = accumulate(initial.energy, -(ts * (a * a + turn_penalty * w * w)))
    return states, energy
