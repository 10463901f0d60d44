"""Control-effectiveness schedules for the inner (attitude) and outer (velocity) loops.

Inner matrix columns are [left flap, right flap, motor 3, motor 4] on the
integer command scales; rows are angular acceleration about body X, Y, Z in
rad/s^2 per command unit and specific force along body Z in m/s^2 per unit.

Every schedule coefficient lives in a flat float array (``DEFAULT_SCHEDULE``)
so vehicle configs can replace them and the jitted closed loop can read them.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit

# schedule layout
S_G21_LO0 = 0  # pitch, low speed, r=0
S_G21_LO1 = 1  # pitch, low speed, r=1
S_G21_HI0 = 2  # pitch, airspeed branch constant
S_G21_HI2 = 3  # pitch, airspeed branch V^2 coefficient
S_G31_LO0 = 4
S_G31_LO1 = 5
S_G31_HI0 = 6
S_G31_HI2 = 7
S_V_SCHED = 8  # airspeed at which the V^2 branch takes over
S_RT_START = 9  # deg, ramp start of the inner r_theta
S_RT_END = 10  # deg, ramp end
S_MOTOR_ROLL = 11
S_THRUST = 12
S_TP_GAIN = 13  # thrust-on-pitch, rad/s^2 per % thrust
S_TP_GATE = 14  # u_l
S_PCT_UNITS = 15  # command units per % thrust
S_LS_LO = 16  # lift slope low-speed coefficient (times m)
S_LS_V = 17  # airspeed where the linear lift-slope law starts
S_LS_V0 = 18
S_LS_K = 19
S_LS_START = 20  # deg
S_LS_END = 21  # deg
N_SCHEDULE = 22

SCHEDULE_FIELDS = (
    "g21_low_level", "g21_low_vertical", "g21_fast_const", "g21_fast_v2",
    "g31_low_level", "g31_low_vertical", "g31_fast_const", "g31_fast_v2",
    "v_schedule", "r_theta_start_deg", "r_theta_end_deg",
    "motor_roll_coeff", "thrust_eff",
    "thrust_pitch_gain", "thrust_pitch_gate", "command_units_per_percent",
    "lift_slope_low", "lift_slope_v", "lift_slope_v0", "lift_slope_k",
    "lift_slope_start_deg", "lift_slope_end_deg",
)

DEFAULT_SCHEDULE = np.array(
    [
        -2.1e-3, -4.0e-3, -2.4e-3, -0.031e-3,
        -2.0e-3, -8.0e-3, -5.6e-3, -0.052e-3,
        6.0, -30.0, -60.0,
        1.8e-6, -0.0011,
        2.2, 7000.0, 96.0,
        -24.0, 12.0, 8.5, 6.88,
        -40.0, -80.0,
    ]
)

G_ACC = 9.81


def schedule_from_mapping(values: dict | None = None) -> np.ndarray:
    """Default schedule with any named entries of ``values`` replaced."""
    s = DEFAULT_SCHEDULE.copy()
    for key, val in (values or {}).items():
        if key not in SCHEDULE_FIELDS:
            raise KeyError(f"unknown schedule field {key!r}")
        s[SCHEDULE_FIELDS.index(key)] = float(val)
    return s


# ---------------------------------------------------------------- kernels


@njit
def ramp_deg(theta, start_deg, end_deg):
    """0 above ``start_deg``, 1 below ``end_deg``, linear in degrees between."""
    d = theta * 180.0 / math.pi
    if d >= start_deg:
        return 0.0
    if d <= end_deg:
        return 1.0
    return (d - start_deg) / (end_deg - start_deg)


@njit
def k_flap_pitch(theta, V, V_valid, s):
    if V_valid and V >= s[S_V_SCHED]:
        return s[S_G21_HI0] + s[S_G21_HI2] * V * V
    r = ramp_deg(theta, s[S_RT_START], s[S_RT_END])
    return s[S_G21_LO0] * (1.0 - r) + s[S_G21_LO1] * r


@njit
def k_flap_yaw(theta, V, V_valid, s):
    if V_valid and V >= s[S_V_SCHED]:
        return s[S_G31_HI0] + s[S_G31_HI2] * V * V
    r = ramp_deg(theta, s[S_RT_START], s[S_RT_END])
    return s[S_G31_LO0] * (1.0 - r) + s[S_G31_LO1] * r


@njit
def k_thrust_pitch(uf1, uf2, s):
    """Thrust-on-pitch gain in rad/s^2 per % thrust, gated on flap saturation."""
    ul = s[S_TP_GATE]
    if uf1 > ul and uf2 < -ul:
        return -s[S_TP_GAIN]
    if uf1 < -ul and uf2 > ul:
        return s[S_TP_GAIN]
    return 0.0


@njit
def k_build_inner(theta, V, V_valid, u_f, s, G):
    """Fill the 4x4 ``G`` in place."""
    for i in range(4):
        for j in range(4):
            G[i, j] = 0.0
    g21 = k_flap_pitch(theta, V, V_valid, s)
    g31 = k_flap_yaw(theta, V, V_valid, s)
    g23 = k_thrust_pitch(u_f[0], u_f[1], s) / s[S_PCT_UNITS]
    G[0, 2] = -u_f[2] * s[S_MOTOR_ROLL]
    G[0, 3] = u_f[3] * s[S_MOTOR_ROLL]
    G[1, 0] = g21
    G[1, 1] = -g21
    G[1, 2] = g23
    G[1, 3] = g23
    G[2, 0] = g31
    G[2, 1] = g31
    G[3, 2] = s[S_THRUST]
    G[3, 3] = s[S_THRUST]


@njit
def k_lift_trim(theta, m, phi, cos_phi_correction):
    th = min(0.0, max(-0.5 * math.pi, theta))
    L = -G_ACC * math.sin(-th) * m
    if cos_phi_correction:
        L /= max(math.cos(phi), 0.2)
    return L


@njit
def k_thrust_trim(theta, m):
    th = min(0.0, max(-0.5 * math.pi, theta))
    return -G_ACC * math.cos(th) * m


@njit
def k_lift_slope(theta, V, V_valid, m, s):
    if V_valid and V >= s[S_LS_V]:
        return -(V - s[S_LS_V0]) * s[S_LS_K] * m
    r = ramp_deg(theta, s[S_LS_START], s[S_LS_END])
    return s[S_LS_LO] * r * m


@njit
def k_build_outer(phi, theta, psi, T, L, dL, G):
    """G_T + G_L in place; columns phi, theta (N/rad) and T (unitless)."""
    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    G[0, 0] = cf * ct * sp * T + cf * sp * L
    G[0, 1] = (ct * cp - sf * st * sp) * T + sf * sp * dL
    G[0, 2] = st * cp + sf * ct * sp
    G[1, 0] = -cf * ct * cp * T - cf * cp * L
    G[1, 1] = (ct * sp + sf * st * cp) * T - sf * cp * dL
    G[1, 2] = st * sp - sf * ct * cp
    G[2, 0] = -sf * ct * T - sf * L
    G[2, 1] = -cf * st * T + cf * dL
    G[2, 2] = cf * ct


# ---------------------------------------------------------------- Python API


def _sched(schedule):
    return DEFAULT_SCHEDULE if schedule is None else np.asarray(schedule, dtype=float)


def r_theta_inner(theta: float, schedule=None) -> float:
    s = _sched(schedule)
    return ramp_deg(float(theta), s[S_RT_START], s[S_RT_END])


def r_theta_lift(theta: float, schedule=None) -> float:
    s = _sched(schedule)
    return ramp_deg(float(theta), s[S_LS_START], s[S_LS_END])


def flap_pitch_eff(theta: float, V: float, V_valid: bool = True, schedule=None) -> float:
    """G21 (G22 = -G21). An invalid airspeed forces the pitch-scheduled branch."""
    return k_flap_pitch(float(theta), float(V), bool(V_valid), _sched(schedule))


def flap_yaw_eff(theta: float, V: float, V_valid: bool = True, schedule=None) -> float:
    """G31 (G32 = G31)."""
    return k_flap_yaw(float(theta), float(V), bool(V_valid), _sched(schedule))


def motor_roll_eff(u_f3: float, u_f4: float, schedule=None) -> tuple[float, float]:
    c = _sched(schedule)[S_MOTOR_ROLL]
    return -u_f3 * c, u_f4 * c


def thrust_pitch_eff(u_f1: float, u_f2: float, schedule=None) -> float:
    """G23 = G24 in rad/s^2 per % thrust."""
    return k_thrust_pitch(float(u_f1), float(u_f2), _sched(schedule))


def build_inner_G(theta: float, V: float, u_f, V_valid: bool = True, schedule=None) -> np.ndarray:
    """Assemble the inner-loop matrix; the thrust-on-pitch entry is per command unit."""
    G = np.empty((4, 4))
    k_build_inner(float(theta), float(V), bool(V_valid), np.asarray(u_f, dtype=float), _sched(schedule), G)
    return G


def lift_trim(theta: float, m: float = 1.2, phi: float = 0.0, cos_phi_correction: bool = False) -> float:
    """Lift magnitude needed to carry the weight at pitch ``theta`` (negative = up)."""
    return k_lift_trim(float(theta), float(m), float(phi), bool(cos_phi_correction))


def thrust_trim(theta: float, m: float = 1.2) -> float:
    return k_thrust_trim(float(theta), float(m))


def lift_slope(theta: float, V: float, m: float = 1.2, V_valid: bool = True, schedule=None) -> float:
    return k_lift_slope(float(theta), float(V), bool(V_valid), float(m), _sched(schedule))


def build_outer_G(eta, T: float, L: float, dL: float) -> np.ndarray:
    phi, theta, psi = eta
    G = np.empty((3, 3))
    k_build_outer(float(phi), float(theta), float(psi), float(T), float(L), float(dL), G)
    return G


def build_outer_G_parts(eta, T: float, L: float, dL: float) -> tuple[np.ndarray, np.ndarray]:
    """(G_T, G_L) separately, for inspection."""
    GT = build_outer_G(eta, T, 0.0, 0.0)
    GL = build_outer_G(eta, T, L, dL) - GT
    GL[:, 2] = 0.0
    return GT, GL
