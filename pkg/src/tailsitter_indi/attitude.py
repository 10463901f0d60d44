"""Inner-loop INDI: attitude error to rate reference to angular-acceleration
demand, then an input increment from the allocator.

    u_c = u_f + du,   du = argmin WLS(G, [nu_omega - Omega_dot_f; dT])

Command ranges are [-9600, 9600] for flaps and [0, 9600] for motors, with a
motor floor that depends on airspeed.
"""

from __future__ import annotations

import math

import numpy as np

from . import frames
from ._accel import njit
from .allocation import DEFAULT_GAMMA, DEFAULT_IMAX, DEFAULT_U_SCALE, DEFAULT_WV, k_allocate
from .effectiveness import DEFAULT_SCHEDULE, k_build_inner
from .errors import NumericalFault
from .filters import ActuatorModel, Butter2Lowpass

U_MAX = 9600.0
FLOOR_LOW = 0.42
FLOOR_HIGH = 0.16
FLOOR_V = 8.0

K_OMEGA_DEFAULT = np.array([28.0, 28.0, 28.0])
K_ETA_HOVER = np.array([7.6, 13.3, 7.6])
K_ETA_FAST = np.array([7.6, 7.6, 7.6])


@njit
def k_thrust_floor(V, V_valid, frac_low, frac_high, v_switch, u_max):
    if V_valid and V >= v_switch:
        return frac_high * u_max
    return frac_low * u_max


def thrust_floor(V: float, V_valid: bool = True) -> float:
    """Minimum motor command: 42 % of full scale below 8 m/s, 16 % from 8 m/s on."""
    return k_thrust_floor(float(V), bool(V_valid), FLOOR_LOW, FLOOR_HIGH, FLOOR_V, U_MAX)


def rate_reference(q_err, K_eta) -> np.ndarray:
    q_err = np.asarray(q_err, dtype=float)
    return np.asarray(K_eta, dtype=float) * q_err[1:4]


def virtual_control(omega_ref, omega, K_omega, dT_d: float) -> np.ndarray:
    nu = np.empty(4)
    nu[:3] = np.asarray(K_omega, dtype=float) * (np.asarray(omega_ref, dtype=float) - np.asarray(omega, dtype=float))
    nu[3] = dT_d
    return nu


@njit
def k_gain_fast(fast, V, V_valid, v_switch, hysteresis):
    """Equal-gain flag: engages at ``v_switch``, releases ``hysteresis`` below it."""
    if not V_valid:
        return False
    if fast:
        return V >= v_switch - hysteresis
    return V >= v_switch


class GainSchedule:
    """Attitude gains K_eta with airspeed-triggered pitch/roll equalization."""

    def __init__(self, hover=K_ETA_HOVER, fast=K_ETA_FAST, v_switch: float = 12.0,
                 hysteresis: float = 1.0, equalize: bool = True):
        self.hover = np.asarray(hover, dtype=float)
        self.fast_gains = np.asarray(fast, dtype=float)
        self.v_switch = v_switch
        self.hysteresis = hysteresis
        self.equalize = equalize
        self.fast = False

    def update(self, V: float, V_valid: bool = True) -> np.ndarray:
        self.fast = k_gain_fast(self.fast, float(V), bool(V_valid), self.v_switch, self.hysteresis)
        return self.gains

    @property
    def gains(self) -> np.ndarray:
        return self.fast_gains if (self.fast and self.equalize) else self.hover


@njit
def k_inner_step(nu, omega_dot_f, u_f, G, floor, Wv, Wu, gamma, u_scale, imax, u_c):
    """Allocate the increment and write clamped commands into ``u_c``.

    Returns (working_set, iterations, converged, finite). A non-finite input
    leaves ``u_c`` untouched and reports ``finite = False``.
    """
    dnu = np.empty(4)
    for i in range(3):
        dnu[i] = nu[i] - omega_dot_f[i]
    dnu[3] = nu[3]
    finite = True
    for i in range(4):
        if not (math.isfinite(dnu[i]) and math.isfinite(u_f[i])):
            finite = False
        for j in range(4):
            if not math.isfinite(G[i, j]):
                finite = False
    ws = np.zeros(4, dtype=np.int64)
    if not finite:
        return ws, 0, False, False
    lo = np.empty(4)
    hi = np.empty(4)
    for i in range(4):
        if i < 2:
            a, b = -U_MAX, U_MAX
        else:
            a, b = floor, U_MAX
        lo[i] = min(a - u_f[i], 0.0)
        hi[i] = max(b - u_f[i], 0.0)
    du, ws, it, ok = k_allocate(G, dnu, lo, hi, Wv, Wu, gamma, u_scale, imax)
    for i in range(4):
        v = u_f[i] + du[i]
        if i < 2:
            v = min(U_MAX, max(-U_MAX, v))
        else:
            v = min(U_MAX, max(floor, v))
        u_c[i] = v
    return ws, it, ok, True


@njit
def k_diff_rate(omega_f, omega_f_prev, dt, out):
    for i in range(3):
        out[i] = (omega_f[i] - omega_f_prev[i]) / dt


class AngularAccelEstimator:
    """Omega_dot_f: low-pass the gyro, then difference the filtered signal."""

    def __init__(self, cutoff_hz: float = 5.0, sample_hz: float = 500.0):
        self.lp = Butter2Lowpass(cutoff_hz, sample_hz, 3)
        self.dt = 1.0 / sample_hz
        self.prev = None
        self.omega_f = np.zeros(3)
        self.omega_dot_f = np.zeros(3)

    def step(self, gyro) -> np.ndarray:
        self.omega_f = self.lp.step(gyro)
        if self.prev is None:
            self.prev = self.omega_f.copy()
        k_diff_rate(self.omega_f, self.prev, self.dt, self.omega_dot_f)
        self.prev[:] = self.omega_f
        return self.omega_dot_f.copy()


def angular_accel_estimate(gyro_stream, cutoff_hz: float = 5.0, sample_hz: float = 500.0) -> np.ndarray:
    """Batch form: one row of Omega_dot_f per gyro sample."""
    est = AngularAccelEstimator(cutoff_hz, sample_hz)
    gyro_stream = np.asarray(gyro_stream, dtype=float).reshape(-1, 3)
    return np.array([est.step(g) for g in gyro_stream])


class InnerLoop:
    """Stand-alone inner loop (attitude reference in, actuator commands out).

    Owns the actuator model that predicts the physical actuator state, the
    shared low-pass for actuators and gyro, the gain schedule and the
    allocator settings. The closed-loop simulator runs the same kernels.
    """

    def __init__(self, sample_hz: float = 500.0, cutoff_hz: float = 5.0, K_omega=K_OMEGA_DEFAULT,
                 gains: GainSchedule | None = None, schedule=None, Wv=DEFAULT_WV, Wu=None,
                 gamma: float = DEFAULT_GAMMA, imax: int = DEFAULT_IMAX, u0=None, G_override=None):
        self.dt = 1.0 / sample_hz
        self.K_omega = np.asarray(K_omega, dtype=float)
        self.gains = gains or GainSchedule()
        self.schedule = DEFAULT_SCHEDULE if schedule is None else np.asarray(schedule, dtype=float)
        self.Wv = np.asarray(Wv, dtype=float)
        self.Wu = np.ones(4) if Wu is None else np.asarray(Wu, dtype=float)
        self.gamma = gamma
        self.imax = imax
        self.u_c = np.zeros(4) if u0 is None else np.asarray(u0, dtype=float).copy()
        self.actuators = ActuatorModel.tailsitter(sample_hz, self.u_c)
        self.u_lp = Butter2Lowpass(cutoff_hz, sample_hz, 4)
        self.accel = AngularAccelEstimator(cutoff_hz, sample_hz)
        self.G_override = G_override
        self.G = np.zeros((4, 4))
        self.last = {}

    def effectiveness(self, theta, V, V_valid, u_f) -> np.ndarray:
        if self.G_override is not None:
            return np.asarray(self.G_override(theta, V, V_valid, u_f), dtype=float)
        k_build_inner(theta, V, V_valid, u_f, self.schedule, self.G)
        return self.G

    def step(self, gyro, q, q_ref, dT_d: float = 0.0, V: float = 0.0, V_valid: bool = False) -> np.ndarray:
        gyro = np.asarray(gyro, dtype=float)
        u_act = self.actuators.step(self.u_c)
        u_f = self.u_lp.step(u_act)
        omega_dot_f = self.accel.step(gyro)
        K_eta = self.gains.update(V, V_valid)
        q_err = frames.quat_error(np.asarray(q_ref, dtype=float), np.asarray(q, dtype=float))
        omega_ref = rate_reference(q_err, K_eta)
        nu = virtual_control(omega_ref, gyro, self.K_omega, dT_d)
        theta = frames.euler_zxy_from_quat(q).theta
        G = self.effectiveness(theta, V, V_valid, u_f)
        floor = thrust_floor(V, V_valid)
        u_c = self.u_c.copy()
        ws, it, ok, finite = k_inner_step(nu, omega_dot_f, u_f, np.ascontiguousarray(G), floor, self.Wv,
                                          self.Wu, self.gamma, DEFAULT_U_SCALE, self.imax, u_c)
        self.last = dict(nu=nu, omega_ref=omega_ref, omega_dot_f=omega_dot_f, u_f=u_f, active_set=ws,
                         iterations=it, converged=ok)
        if not finite:
            raise NumericalFault("non-finite value in the inner loop; previous command held")
        self.u_c = u_c
        return u_c.copy()


def inner_indi_step(nu, omega_dot_f, u_f, G, floor: float = 0.0, Wv=DEFAULT_WV, gamma: float = DEFAULT_GAMMA,
                    imax: int = DEFAULT_IMAX, u_prev=None):
    """One allocation step. Returns (u_c, info); raises on non-finite input."""
    u_c = np.zeros(4) if u_prev is None else np.asarray(u_prev, dtype=float).copy()
    ws, it, ok, finite = k_inner_step(
        np.asarray(nu, dtype=float), np.asarray(omega_dot_f, dtype=float), np.asarray(u_f, dtype=float),
        np.ascontiguousarray(G, dtype=float), float(floor), np.asarray(Wv, dtype=float), np.ones(4),
        float(gamma), DEFAULT_U_SCALE, int(imax), u_c,
    )
    if not finite:
        raise NumericalFault("non-finite value in the inner loop; previous command held")
    return u_c, dict(active_set=ws, iterations=it, converged=ok)
