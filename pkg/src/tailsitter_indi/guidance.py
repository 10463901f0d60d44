"""Guidance: acceleration references for the outer INDI loop.

Every flight-plan element produces a desired ground velocity. Far from the
target that velocity is capped by the stopping distance sqrt(2 d a_max) and by
the maximum airspeed (using a running wind estimate). The velocity is then
tracked either directly,

    acc_ref = ((xi_ref - xi) K_xi - xi_dot) K_xi_dot,

or, when both the current and the desired airspeed are high, by a
fixed-wing style turn that holds airspeed and bends the course.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import wrap_pi

DIRECT = 0
FIXED_WING_TURN = 1
MODE_NAMES = {DIRECT: "direct", FIXED_WING_TURN: "fixed_wing_turn"}


@dataclass
class GuidanceGains:
    K_xi: float = 0.5
    K_xi_dot: float = 1.5
    a_max: float = 1.0  # deceleration assumed for the stopping-distance cap
    a_horizontal_max: float = 3.0
    a_vertical_max: float = 3.0
    turn_lateral_max: float = 6.0
    turn_course_gain: float = 0.8  # 1/s
    turn_speed_gain: float = 0.8  # 1/s
    v_turn_current: float = 10.0
    v_turn_desired: float = 14.0
    airspeed_max: float = 16.0
    approach_limit: bool = True
    switch_distance: float = 20.0
    capture_radius: float = 3.0
    line_gain_distance: float = 50.0
    line_quadratic: float = 0.05
    wind_tau: float = 2.0
    wind_nose_min: float = 0.7  # horizontal part of the nose direction needed to update the wind estimate


def pd_accel_ref(xi_ref, xi, xi_dot, K_xi: float, K_xi_dot: float) -> np.ndarray:
    xi_ref, xi, xi_dot = (np.asarray(a, dtype=float) for a in (xi_ref, xi, xi_dot))
    return ((xi_ref - xi) * K_xi - xi_dot) * K_xi_dot


def approach_speed_limit(d: float, a_max: float) -> float:
    """Highest speed from which ``a_max`` still stops the vehicle within ``d``."""
    return math.sqrt(2.0 * max(d, 0.0) * a_max)


def cap_speed_toward(v_des, d: float, a_max: float) -> np.ndarray:
    """Reduce the horizontal part of ``v_des`` to the stopping-distance limit; never increase it."""
    v = np.array(v_des, dtype=float)
    h = math.hypot(v[0], v[1])
    lim = approach_speed_limit(d, a_max)
    if h > lim and h > 0.0:
        v[:2] *= lim / h
    return v


def select_turn_mode(V_current: float, V_desired: float, v_current: float = 10.0, v_desired: float = 14.0) -> int:
    return FIXED_WING_TURN if (V_current > v_current and V_desired > v_desired) else DIRECT


def line_lambda(d: float, quadratic: float = 0.05, scale: float = 50.0) -> float:
    d = abs(d)
    return math.atan((d + quadratic * d * d) / scale)


@dataclass
class Line:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.end = np.asarray(self.end, dtype=float)
        seg = self.end[:2] - self.start[:2]
        self.length = float(np.hypot(*seg))
        if self.length <= 0.0:
            raise ValueError("line has zero horizontal length")
        self.t = seg / self.length
        self.n = np.array([-self.t[1], self.t[0]])  # right of the direction of travel

    def cross_track(self, p) -> float:
        return float(self.n @ (np.asarray(p, dtype=float)[:2] - self.start[:2]))

    def along_track(self, p) -> float:
        return float(self.t @ (np.asarray(p, dtype=float)[:2] - self.start[:2]))

    def altitude_at(self, p) -> float:
        s = min(1.0, max(0.0, self.along_track(p) / self.length))
        return float(self.start[2] + s * (self.end[2] - self.start[2]))


def line_vector(p, line: Line, quadratic: float = 0.05, scale: float = 50.0) -> tuple[np.ndarray, float]:
    """Horizontal unit direction of the vector field at ``p`` and the signed angle lambda.

    The direction is rotated from the line direction toward the line by
    |lambda|; lambda is positive when the rotation is to the right.
    """
    e = line.cross_track(p)
    lam = line_lambda(e, quadratic, scale)
    if e > 0.0:
        lam = -lam
    c, s = math.cos(lam), math.sin(lam)
    t, n = line.t, line.n
    d = c * t + s * n
    return d, lam


def fixed_wing_turn_ref(v_ground, v_air, course_target: float, V_desired: float, v_z_des: float,
                        gains: GuidanceGains) -> np.ndarray:
    """Coordinated horizontal acceleration toward ``course_target`` at airspeed ``V_desired``.

    The tangential part holds airspeed, the normal part bends the course at
    a rate proportional to the course error, bounded by ``turn_lateral_max``.
    """
    v_ground = np.asarray(v_ground, dtype=float)
    v_air = np.asarray(v_air, dtype=float)
    Va = math.hypot(v_air[0], v_air[1])
    if Va < 1e-3:
        t_hat = np.array([math.cos(course_target), math.sin(course_target)])
    else:
        t_hat = v_air[:2] / Va
    n_hat = np.array([-t_hat[1], t_hat[0]])
    course = math.atan2(v_ground[1], v_ground[0]) if math.hypot(v_ground[0], v_ground[1]) > 1e-3 else course_target
    err = wrap_pi(course_target - course)
    a_t = gains.turn_speed_gain * (V_desired - Va)
    a_t = max(-gains.a_horizontal_max, min(gains.a_horizontal_max, a_t))
    a_n = gains.turn_course_gain * err * max(Va, 1.0)
    a_n = max(-gains.turn_lateral_max, min(gains.turn_lateral_max, a_n))
    acc = np.zeros(3)
    acc[:2] = a_t * t_hat + a_n * n_hat
    acc[2] = gains.K_xi_dot * (v_z_des - v_ground[2])
    return acc


# ---------------------------------------------------------------- flight plan


@dataclass
class Hover:
    point: np.ndarray
    heading: float | None = None  # initial heading reference when this element starts the plan
    duration: float = math.inf

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)


@dataclass
class GotoWaypoint:
    point: np.ndarray
    speed: float = 16.0  # airspeed cap

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)


@dataclass
class FollowLine:
    start: np.ndarray
    end: np.ndarray
    speed: float = 16.0  # ground speed along the vector field

    def __post_init__(self):
        self.line = Line(self.start, self.end)
        self.start = self.line.start
        self.end = self.line.end


@dataclass
class FlightPlan:
    elements: list = field(default_factory=list)

    def __len__(self):
        return len(self.elements)


@dataclass
class GuidanceOutput:
    acc_ref: np.ndarray
    mode: int
    element: int
    v_des: np.ndarray
    cross_track: float = float("nan")


class Guidance:
    """Sequencer plus velocity shaping for a :class:`FlightPlan`."""

    def __init__(self, plan: FlightPlan, gains: GuidanceGains | None = None, dt: float = 0.02):
        if len(plan) == 0:
            raise ValueError("empty flight plan")
        self.plan = plan
        self.gains = gains or GuidanceGains()
        self.dt = dt
        self.index = 0
        self.element_time = 0.0
        self.wind = np.zeros(3)
        self.mode = DIRECT
        self.mode_changes: list = []

    @property
    def element(self):
        return self.plan.elements[self.index]

    def _advance(self, t: float):
        if self.index + 1 < len(self.plan):
            self.index += 1
            self.element_time = 0.0

    def update_wind(self, v_ground, nose_ned, airspeed: float, airspeed_valid: bool):
        # level flight without sideslip: the horizontal airspeed lies along the
        # horizontal projection of the nose; only trusted once the nose is low
        nose = np.asarray(nose_ned, dtype=float)
        h = math.hypot(nose[0], nose[1])
        if not airspeed_valid or h < self.gains.wind_nose_min:
            return
        meas = np.asarray(v_ground, dtype=float).copy()
        meas[:2] -= airspeed * nose[:2] / h
        meas[2] = 0.0
        k = min(1.0, self.dt / self.gains.wind_tau)
        self.wind += k * (meas - self.wind)

    def _cap_airspeed(self, v_des, limit: float) -> np.ndarray:
        v = np.array(v_des, dtype=float)
        air = v[:2] - self.wind[:2]
        a = math.hypot(*air)
        if a > limit:
            air *= limit / a
            v[:2] = self.wind[:2] + air
        return v

    def _desired_velocity(self, t, pos, el):
        g = self.gains
        cross = float("nan")
        if isinstance(el, (Hover, GotoWaypoint)):
            err = el.point - pos
            v = err * g.K_xi
            d = math.hypot(err[0], err[1])
            if g.approach_limit:
                v = cap_speed_toward(v, d, g.a_max)
            air_limit = min(el.speed, g.airspeed_max) if isinstance(el, GotoWaypoint) else g.airspeed_max
            if isinstance(el, GotoWaypoint) and d < g.capture_radius:
                self._advance(t)
            if isinstance(el, Hover) and self.element_time >= el.duration:
                self._advance(t)
        else:
            line = el.line
            direction, _ = line_vector(pos, line, g.line_quadratic, g.line_gain_distance)
            cross = line.cross_track(pos)
            remaining = line.length - line.along_track(pos)
            v = np.zeros(3)
            v[:2] = el.speed * direction
            v[2] = (line.altitude_at(pos) - pos[2]) * g.K_xi
            if remaining < g.switch_distance:
                self._advance(t)
            air_limit = g.airspeed_max
        v = self._cap_airspeed(v, air_limit)
        return v, cross

    def step(self, t: float, pos, vel, airspeed: float, airspeed_valid: bool, nose_ned=None) -> GuidanceOutput:
        g = self.gains
        pos = np.asarray(pos, dtype=float)
        vel = np.asarray(vel, dtype=float)
        if nose_ned is not None:
            self.update_wind(vel, nose_ned, airspeed, airspeed_valid)
        idx = self.index
        el = self.element
        v_des, cross = self._desired_velocity(t, pos, el)
        self.element_time += self.dt
        V_now = airspeed if airspeed_valid else 0.0
        v_des_air = v_des[:2] - self.wind[:2]
        mode = select_turn_mode(V_now, math.hypot(*v_des_air), g.v_turn_current, g.v_turn_desired)
        if mode != self.mode:
            self.mode_changes.append((t, MODE_NAMES[mode]))
            self.mode = mode
        if mode == FIXED_WING_TURN:
            v_air = vel - self.wind
            acc = fixed_wing_turn_ref(vel, v_air, math.atan2(v_des[1], v_des[0]), math.hypot(*v_des_air),
                                      v_des[2], g)
        else:
            acc = (v_des - vel) * g.K_xi_dot
            h = math.hypot(acc[0], acc[1])
            if h > g.a_horizontal_max:
                acc[:2] *= g.a_horizontal_max / h
        acc[2] = max(-g.a_vertical_max, min(g.a_vertical_max, acc[2]))
        return GuidanceOutput(acc, mode, idx, v_des, cross)
