"""Rigid-body tailsitter plant with a declared, synthetic aerodynamic model.

Body axes follow the controller: the nose points along -Z_B, thrust acts
along -Z_B, and wing lift in forward flight acts along -X_B. Aerodynamics
are computed in an airplane frame (x_a = -Z_B, y_a = Y_B, z_a = X_B).

None of the coefficients come from a real airframe. They are tuned so the
plant reproduces the qualitative phenomena the controller must cope with:
a pitch-down moment at high angle of attack, flap effectiveness that grows
with propeller slipstream, and direct flap lift that makes the body-X
acceleration respond first in the wrong direction.

State layout: pos NED (0:3), vel NED (3:6), quaternion body->NED (6:10),
body rates (10:13), physical actuator states (13:17), time (17).
"""

from __future__ import annotations

import math

import numpy as np

from .._accel import njit

X_POS, X_VEL, X_Q, X_W, X_U, X_T = 0, 3, 6, 10, 13, 17
N_STATE = 18

# plant parameter layout
PP_M = 0
PP_IXX = 1
PP_IYY = 2
PP_IZZ = 3
PP_G = 4
PP_RHO = 5
PP_FMAX = 6  # static thrust per motor at full command, N
PP_KV = 7  # thrust loss with axial speed, N per (m/s) at full command
PP_AP = 8  # propeller disk area, m^2
PP_YM = 9  # motor lateral offset, m
PP_ETA = 10  # fraction of the flap washed by the slipstream
PP_CDS = 11  # flap lift derivative times flap area, m^2/rad
PP_ZF = 12  # flap arm behind the CG along +Z_B, m
PP_YF = 13  # lateral arm of the free-stream part of the flap lift, m
PP_S = 14
PP_B = 15
PP_C = 16
PP_CL0 = 17
PP_CLA = 18
PP_CD0 = 19
PP_KIND = 20
PP_A0 = 21  # stall angle of the blend, rad
PP_MBL = 22  # blend sharpness
PP_CM0 = 23
PP_CMA = 24
PP_CPS = 25  # post-stall pitch-down coefficient
PP_CY = 26  # side force per rad of sideslip
PP_DAMP0 = 27  # rate damping at zero airspeed, N m s (3 entries: 27..29)
PP_DAMPV = 30  # rate damping growth with airspeed, N m s^2/m (30..32)
PP_FLAP_MAX = 33  # rad at full command
PP_U_MAX = 34
PP_A_FLAP = 35
PP_A_MOTOR = 36
PP_FLAP_RATE = 37  # command units per second
PP_DT = 38
PP_SUBSTEPS = 39
PP_RK4 = 40
N_PLANT = 41

PLANT_FIELDS = (
    "mass", "Ixx", "Iyy", "Izz", "g", "rho", "thrust_max", "thrust_speed_loss", "prop_area", "motor_arm",
    "slipstream_fraction", "flap_lift_area", "flap_arm_z", "flap_arm_y", "wing_area", "span", "chord",
    "CL0", "CL_alpha", "CD0", "k_induced", "stall_alpha", "stall_blend", "Cm0", "Cm_alpha", "Cm_poststall",
    "CY_beta", "damp0_x", "damp0_y", "damp0_z", "dampV_x", "dampV_y", "dampV_z",
    "flap_max_rad", "u_max", "a_flap", "a_motor", "flap_rate_units", "dt", "substeps", "rk4",
)

DEFAULT_PLANT = np.array(
    [
        1.2, 0.026, 0.011, 0.016, 9.81, 1.225, 14.0, 0.1, 0.0314, 0.18,
        0.22, 0.09, 0.12, 0.28, 0.17, 0.7, 0.24,
        0.0, 3.0, 0.04, 0.137, 0.45, 15.0, 0.0, -0.25, 0.3,
        -0.3, 0.004, 0.004, 0.004, 0.0015, 0.024, 0.013,
        math.pi / 6.0, 9600.0, 0.1, 0.045, 272.0 / 30.0 * 9600.0, 0.002, 1.0, 0.0,
    ]
)


def plant_from_mapping(values: dict | None = None) -> np.ndarray:
    p = DEFAULT_PLANT.copy()
    for key, val in (values or {}).items():
        if key not in PLANT_FIELDS:
            raise KeyError(f"unknown plant field {key!r}")
        p[PLANT_FIELDS.index(key)] = float(val)
    return p


@njit
def k_motor_thrust(u, u_axial, p):
    n = u / p[PP_U_MAX]
    if n < 0.0:
        n = 0.0
    return max(0.0, p[PP_FMAX] * n * n - p[PP_KV] * n * u_axial)


@njit
def k_blend(alpha, a0, M):
    """Sigmoid weight of the post-stall model (0 attached, 1 separated)."""
    e1 = math.exp(min(50.0, -M * (alpha - a0)))
    e2 = math.exp(min(50.0, M * (alpha + a0)))
    return (1.0 + e1 + e2) / ((1.0 + e1) * (1.0 + e2))


@njit
def k_air_data(x, wind):
    """Returns (u_a, v_a, w_a, V, alpha, beta) of the relative wind in airplane axes."""
    q = x[X_Q:X_Q + 4]
    R = np.empty((3, 3))
    _rotmat(q, R)
    vr0 = x[X_VEL] - wind[0]
    vr1 = x[X_VEL + 1] - wind[1]
    vr2 = x[X_VEL + 2] - wind[2]
    vb0 = R[0, 0] * vr0 + R[1, 0] * vr1 + R[2, 0] * vr2
    vb1 = R[0, 1] * vr0 + R[1, 1] * vr1 + R[2, 1] * vr2
    vb2 = R[0, 2] * vr0 + R[1, 2] * vr1 + R[2, 2] * vr2
    u_a, v_a, w_a = -vb2, vb1, vb0
    V = math.sqrt(u_a * u_a + v_a * v_a + w_a * w_a)
    alpha = math.atan2(w_a, u_a) if (abs(u_a) + abs(w_a)) > 1e-9 else 0.0
    beta = math.asin(max(-1.0, min(1.0, v_a / V))) if V > 1e-6 else 0.0
    return u_a, v_a, w_a, V, alpha, beta


@njit
def _rotmat(q, R):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = 1.0 - 2.0 * (x * x + y * y)


@njit
def k_forces_moments(x, u, wind, p, F, M):
    """Body-frame force (N, without gravity) and moment (N m) into F, M."""
    u_a, v_a, w_a, V, alpha, beta = k_air_data(x, wind)
    rho = p[PP_RHO]
    q_free = 0.5 * rho * V * V
    q_axial = 0.5 * rho * u_a * abs(u_a)

    # propellers: motor index 2 sits at +Y_B, index 3 at -Y_B
    F2 = k_motor_thrust(u[2], u_a, p)
    F3 = k_motor_thrust(u[3], u_a, p)
    F[0] = 0.0
    F[1] = 0.0
    F[2] = -(F2 + F3)
    M[0] = p[PP_YM] * (F3 - F2)
    M[1] = 0.0
    M[2] = 0.0

    # wing
    S, c = p[PP_S], p[PP_C]
    sig = k_blend(alpha, p[PP_A0], p[PP_MBL])
    sa, ca = math.sin(alpha), math.cos(alpha)
    cl_lin = p[PP_CL0] + p[PP_CLA] * alpha
    sgn = 1.0 if alpha >= 0.0 else -1.0
    cl = (1.0 - sig) * cl_lin + sig * 2.0 * sgn * sa * sa * ca
    cd = p[PP_CD0] + (1.0 - sig) * p[PP_KIND] * cl_lin * cl_lin + sig * 2.0 * sa * sa
    cm = (1.0 - sig) * (p[PP_CM0] + p[PP_CMA] * alpha) - sig * p[PP_CPS] * sa
    fa_x = q_free * S * (cl * sa - cd * ca)
    fa_y = q_free * S * p[PP_CY] * beta
    fa_z = q_free * S * (-cl * ca - cd * sa)
    F[0] += fa_z
    F[1] += fa_y
    F[2] -= fa_x
    M[1] += q_free * S * c * cm

    # flaps: lift increment along -X_B, down deflection positive
    k = p[PP_FLAP_MAX] / p[PP_U_MAX]
    ap = p[PP_AP]
    eta = p[PP_ETA]
    q_slip3 = q_axial + F3 / ap
    q_slip2 = q_axial + F2 / ap
    # the washed part sits inboard behind the motor, the rest further out
    d0 = p[PP_CDS] * u[0] * k
    d1 = -p[PP_CDS] * u[1] * k
    s0, s1 = eta * q_slip3 * d0, eta * q_slip2 * d1
    f0, f1 = (1.0 - eta) * q_axial * d0, (1.0 - eta) * q_axial * d1
    dl = s0 + s1 + f0 + f1
    F[0] -= dl
    M[1] -= p[PP_ZF] * dl
    M[2] += p[PP_YM] * (s1 - s0) + p[PP_YF] * (f1 - f0)

    # rate damping
    for i in range(3):
        M[i] -= (p[PP_DAMP0 + i] + p[PP_DAMPV + i] * V) * x[X_W + i]


@njit
def k_derivatives(x, u, wind, p, dx):
    F = np.empty(3)
    M = np.empty(3)
    k_forces_moments(x, u, wind, p, F, M)
    q = x[X_Q:X_Q + 4]
    R = np.empty((3, 3))
    _rotmat(q, R)
    m = p[PP_M]
    for i in range(3):
        dx[X_POS + i] = x[X_VEL + i]
        dx[X_VEL + i] = (R[i, 0] * F[0] + R[i, 1] * F[1] + R[i, 2] * F[2]) / m
    dx[X_VEL + 2] += p[PP_G]
    w0, w1, w2 = x[X_W], x[X_W + 1], x[X_W + 2]
    dx[X_Q] = 0.5 * (-q[1] * w0 - q[2] * w1 - q[3] * w2)
    dx[X_Q + 1] = 0.5 * (q[0] * w0 + q[2] * w2 - q[3] * w1)
    dx[X_Q + 2] = 0.5 * (q[0] * w1 - q[1] * w2 + q[3] * w0)
    dx[X_Q + 3] = 0.5 * (q[0] * w2 + q[1] * w1 - q[2] * w0)
    Ixx, Iyy, Izz = p[PP_IXX], p[PP_IYY], p[PP_IZZ]
    dx[X_W] = (M[0] - (Izz - Iyy) * w1 * w2) / Ixx
    dx[X_W + 1] = (M[1] - (Ixx - Izz) * w2 * w0) / Iyy
    dx[X_W + 2] = (M[2] - (Iyy - Ixx) * w0 * w1) / Izz
    for i in range(4):
        dx[X_U + i] = 0.0
    dx[X_T] = 1.0


@njit
def k_normalize_q(x):
    n = math.sqrt(x[X_Q] ** 2 + x[X_Q + 1] ** 2 + x[X_Q + 2] ** 2 + x[X_Q + 3] ** 2)
    for i in range(4):
        x[X_Q + i] /= n


@njit
def k_specific_force(x, u, wind, p, out):
    """Accelerometer truth: non-gravitational force over mass, body axes."""
    M = np.empty(3)
    k_forces_moments(x, u, wind, p, out, M)
    for i in range(3):
        out[i] /= p[PP_M]


@njit
def k_actuators(x, u_c, p):
    """Advance the physical actuator states one control period (discrete lag + rate limit)."""
    flap_step = p[PP_FLAP_RATE] * p[PP_DT]
    for i in range(4):
        a = p[PP_A_FLAP] if i < 2 else p[PP_A_MOTOR]
        du = a * (u_c[i] - x[X_U + i])
        if i < 2:
            du = min(flap_step, max(-flap_step, du))
        x[X_U + i] += du


@njit
def k_semi_implicit(x, wind, p, h):
    dx = np.empty(N_STATE)
    u = x[X_U:X_U + 4].copy()
    k_derivatives(x, u, wind, p, dx)
    # rates first, then attitude with the new rates, velocity, then position
    for i in range(3):
        x[X_W + i] += h * dx[X_W + i]
    w0, w1, w2 = x[X_W], x[X_W + 1], x[X_W + 2]
    wn = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    if wn > 1e-12:
        half = 0.5 * wn * h
        s = math.sin(half) / wn
        dq = np.array([math.cos(half), w0 * s, w1 * s, w2 * s])
        q = x[X_Q:X_Q + 4].copy()
        x[X_Q] = q[0] * dq[0] - q[1] * dq[1] - q[2] * dq[2] - q[3] * dq[3]
        x[X_Q + 1] = q[0] * dq[1] + q[1] * dq[0] + q[2] * dq[3] - q[3] * dq[2]
        x[X_Q + 2] = q[0] * dq[2] - q[1] * dq[3] + q[2] * dq[0] + q[3] * dq[1]
        x[X_Q + 3] = q[0] * dq[3] + q[1] * dq[2] - q[2] * dq[1] + q[3] * dq[0]
    for i in range(3):
        x[X_VEL + i] += h * dx[X_VEL + i]
        x[X_POS + i] += h * x[X_VEL + i]
    x[X_T] += h
    k_normalize_q(x)


@njit
def k_rk4(x, wind, p, h):
    u = x[X_U:X_U + 4].copy()
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    tmp = np.empty(N_STATE)
    k_derivatives(x, u, wind, p, k1)
    for i in range(N_STATE):
        tmp[i] = x[i] + 0.5 * h * k1[i]
    k_derivatives(tmp, u, wind, p, k2)
    for i in range(N_STATE):
        tmp[i] = x[i] + 0.5 * h * k2[i]
    k_derivatives(tmp, u, wind, p, k3)
    for i in range(N_STATE):
        tmp[i] = x[i] + h * k3[i]
    k_derivatives(tmp, u, wind, p, k4)
    for i in range(N_STATE):
        if X_U <= i < X_U + 4:
            continue
        x[i] += h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
    k_normalize_q(x)


@njit
def k_plant_step(x, u_c, wind, p):
    """One control period: actuators, then ``substeps`` integration steps."""
    k_actuators(x, u_c, p)
    n = int(p[PP_SUBSTEPS])
    if n < 1:
        n = 1
    h = p[PP_DT] / n
    for _ in range(n):
        if p[PP_RK4] > 0.5:
            k_rk4(x, wind, p, h)
        else:
            k_semi_implicit(x, wind, p, h)


# ---------------------------------------------------------------- Python API


def initial_state(pos=(0.0, 0.0, -40.0), vel=(0.0, 0.0, 0.0), q=(1.0, 0.0, 0.0, 0.0),
                  omega=(0.0, 0.0, 0.0), u=(0.0, 0.0, 0.0, 0.0), t: float = 0.0) -> np.ndarray:
    x = np.zeros(N_STATE)
    x[X_POS:X_POS + 3] = pos
    x[X_VEL:X_VEL + 3] = vel
    x[X_Q:X_Q + 4] = q
    x[X_W:X_W + 3] = omega
    x[X_U:X_U + 4] = u
    x[X_T] = t
    k_normalize_q(x)
    return x


def plant_step(state, u_c, wind=(0.0, 0.0, 0.0), params=None) -> np.ndarray:
    """Return the state one control period later; the input array is not modified."""
    p = DEFAULT_PLANT if params is None else np.asarray(params, dtype=float)
    x = np.array(state, dtype=float)
    k_plant_step(x, np.asarray(u_c, dtype=float), np.asarray(wind, dtype=float), p)
    return x


def forces_moments(state, u=None, wind=(0.0, 0.0, 0.0), params=None):
    p = DEFAULT_PLANT if params is None else np.asarray(params, dtype=float)
    x = np.asarray(state, dtype=float)
    uu = x[X_U:X_U + 4].copy() if u is None else np.asarray(u, dtype=float)
    F = np.empty(3)
    M = np.empty(3)
    k_forces_moments(x, uu, np.asarray(wind, dtype=float), p, F, M)
    return F, M


def air_data(state, wind=(0.0, 0.0, 0.0)) -> dict:
    u_a, v_a, w_a, V, alpha, beta = k_air_data(np.asarray(state, dtype=float), np.asarray(wind, dtype=float))
    return dict(u_a=u_a, v_a=v_a, w_a=w_a, V=V, alpha=alpha, beta=beta)


def hover_command(params=None) -> float:
    """Motor command that balances weight with both motors at zero airspeed."""
    p = DEFAULT_PLANT if params is None else np.asarray(params, dtype=float)
    return p[PP_U_MAX] * math.sqrt(0.5 * p[PP_M] * p[PP_G] / p[PP_FMAX])
