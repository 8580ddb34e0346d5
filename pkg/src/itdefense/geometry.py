"""Line-of-sight geometry, constant-velocity intercept feasibility, and
straight-line track anticipation shared by both planners."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# minimum closing speed, as a fraction of the interceptor speed
EPS_CLOSE = 1e-9


class GeometryError(ValueError):
    """Raised for geometrically undefined queries (coincident points, bad speeds)."""


def arctan2_checked(y: float, x: float) -> float:
    """Four-quadrant angle in (-pi, pi]; undefined at the origin."""
    if x == 0 and y == 0:
        raise GeometryError("arctan2 is undefined at the origin")
    ang = math.atan2(y, x)
    # atan2(-0.0, x<0) returns -pi; the half-open range keeps +pi
    return math.pi if ang == -math.pi else ang


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


def los_angle(p_from, p_to) -> float:
    dx = float(p_to[0]) - float(p_from[0])
    dy = float(p_to[1]) - float(p_from[1])
    if dx == 0 and dy == 0:
        raise GeometryError("line of sight undefined for coincident points")
    return arctan2_checked(dy, dx)


def unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


@dataclass(frozen=True)
class InterceptSolution:
    gamma: float
    heading: float
    time_to_intercept: float
    closing_speed: float
    los: float

    feasible = True

    def hit_point(self, p_ei, v_itc: float) -> np.ndarray:
        return np.asarray(p_ei, dtype=float) + self.time_to_intercept * v_itc * unit(self.heading)


@dataclass(frozen=True)
class Infeasible:
    reason: str  # "gamma" or "receding"
    gamma: float
    los: float

    feasible = False


def solve_intercept(p_it, p_ei, theta_atk: float, v_atk: float,
                    v_itc: float) -> InterceptSolution | Infeasible:
    """Constant-velocity collision heading for an interceptor against a
    straight-flying threat.

    The heading nulls the line-of-sight-perpendicular relative velocity.
    Of the two headings that do so, the arcsin branch is preferred; the
    supplementary branch is used only when the first one does not close.
    """
    if not (v_atk > 0 and v_itc > 0):
        raise GeometryError(f"speeds must be positive, got v_atk={v_atk}, v_itc={v_itc}")
    r = np.asarray(p_it, dtype=float) - np.asarray(p_ei, dtype=float)
    los = los_angle(p_ei, p_it)
    rng = math.hypot(r[0], r[1])
    gamma = (v_atk / v_itc) * math.sin(wrap_angle(theta_atk - los))
    if abs(gamma) > 1.0:
        return Infeasible("gamma", gamma, los)

    r_hat = r / rng
    u_atk = unit(theta_atk)
    asg = math.asin(gamma)
    for heading in (los + asg, los + math.pi - asg):
        v_rel = v_itc * unit(heading) - v_atk * u_atk
        closing = float(v_rel @ r_hat)
        if closing > EPS_CLOSE * v_itc:
            return InterceptSolution(
                gamma=gamma,
                heading=heading,
                time_to_intercept=rng / float(np.hypot(v_rel[0], v_rel[1])),
                closing_speed=float(np.hypot(v_rel[0], v_rel[1])),
                los=los,
            )
    return Infeasible("receding", gamma, los)


def circular_mean(angles: Sequence[float]) -> float:
    if len(angles) == 0:
        raise GeometryError("circular mean of an empty set")
    s = sum(math.sin(a) for a in angles)
    c = sum(math.cos(a) for a in angles)
    if math.hypot(s, c) <= 1e-12 * len(angles):
        raise GeometryError("circular mean undefined for balanced headings")
    return arctan2_checked(s, c)


def blend_angles(a: float, b: float, weight: float) -> float:
    """Shortest-arc convex combination: weight 0 gives a, 1 gives a + wrap(b - a)."""
    if weight == 0.0:
        return a
    return a + weight * wrap_angle(b - a)


def terminal_heading(p_it, p_hva, proximal_ei_positions: Sequence, psi: float) -> float:
    """Attack/evasion blend the command node attributes to the threat.

    Each evasion heading points from the threat toward an interceptor.
    """
    theta_atk = los_angle(p_it, p_hva)
    if len(proximal_ei_positions) == 0:
        if psi > 0:
            raise GeometryError("evasion heading needs at least one proximal interceptor when psi > 0")
        return theta_atk
    evd = [los_angle(p_it, p) for p in proximal_ei_positions]
    if psi == 0:
        return theta_atk
    return blend_angles(theta_atk, circular_mean(evd), psi)


@dataclass(frozen=True)
class AnticipatedTrack:
    origin: tuple[float, float]
    heading: float
    speed: float
    step: float
    positions: np.ndarray  # (h+1, 2)

    @property
    def horizon(self) -> int:
        return len(self.positions) - 1


def anticipate_line(origin, heading: float, speed: float, ts: float, h: int) -> AnticipatedTrack:
    """Straight constant-speed track sampled by the Euler recursion."""
    if not (ts > 0 and h >= 1 and speed > 0):
        raise GeometryError("anticipate_line needs ts > 0, h >= 1, speed > 0")
    d = ts * speed * unit(heading)
    pos = np.empty((h + 1, 2))
    pos[0] = np.asarray(origin, dtype=float)
    for j in range(h):
        pos[j + 1] = pos[j] + d
    return AnticipatedTrack((float(pos[0, 0]), float(pos[0, 1])), heading, speed, ts, pos)
