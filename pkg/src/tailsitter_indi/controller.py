"""The 500 Hz control tick: outer INDI, heading reference, inner INDI.

All controller memory lives in flat arrays so the whole tick can run inside
one jitted call. ``Controller`` is the Python owner of those arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._accel import njit
from .allocation import DEFAULT_GAMMA, DEFAULT_IMAX, DEFAULT_U_SCALE, DEFAULT_WV
from .attitude import k_gain_fast, k_inner_step, k_thrust_floor
from .effectiveness import DEFAULT_SCHEDULE, S_THRUST, k_build_inner
from .errors import NumericalFault
from .filters import butter2_lowpass_sos, butter4_highpass_sos
from .frames import k_euler_from_rotmat, k_quat_error, k_quat_from_euler, k_quat_to_rotmat, k_wrap_pi
from .sideslip import k_heading_rate
from .velocity import k_outer_increment

# parameter layout
C_DT = 0
C_M = 1
C_KO = 2  # K_Omega, 3 entries
C_KEH = 5  # K_eta below the switch speed, 3 entries
C_KEF = 8  # K_eta above it, 3 entries
C_VEQ = 11
C_HYST = 12
C_EQUALIZE = 13
C_KBETA = 14
C_C2 = 15
C_B2 = 16
C_GFLAP = 17
C_COMP = 18
C_TSCALE = 19
C_COSPHI = 20
C_PHIMAX = 21
C_THMAX = 22
C_THMIN = 23
C_FLO = 24
C_FHI = 25
C_FV = 26
C_GAMMA = 27
C_USCALE = 28
C_IMAX = 29
C_AFLAP = 30
C_AMOT = 31
C_FRATE = 32
C_VFLOOR = 33
C_OUTER_DIV = 34
C_G = 35
N_CPARAM = 36

# state layout
CS_UC = 0  # 4
CS_UACT = 4  # 4, controller-side actuator model
CS_WPREV = 8  # 3, previous filtered gyro
CS_PSI_REF = 11
CS_FAST = 12
CS_INIT = 13
CS_VREF = 14  # phi_ref, theta_ref, dT (m/s^2)
CS_TICK = 17
CS_PSI_DOT = 18
CS_NEAR_SING = 19
CS_PSI = 20  # last measured heading (gimbal-lock hint)
N_CSTATE = 21

# low-pass channel layout
LP_GYRO, LP_U, LP_ACC, LP_PHI, LP_THETA, LP_T, LP_FY = 0, 3, 7, 10, 11, 12, 13
N_LP = 14

CTRL_LOG = (
    "phi_f", "theta_f", "psi_meas", "phi_ref", "theta_ref", "psi_ref", "psi_dot_ref", "dT_ref",
    "beta_hat", "f_y_f",
    "acc_ref_n", "acc_ref_e", "acc_ref_d", "acc_f_n", "acc_f_e", "acc_f_d",
    "acc_comp_n", "acc_comp_e", "acc_comp_d", "hp_flap", "acc_bx_f",
    "nu_p", "nu_q", "nu_r", "nu_T", "omega_ref_p", "omega_ref_q", "omega_ref_r",
    "omega_f_p", "omega_f_q", "omega_f_r", "omega_dot_f_p", "omega_dot_f_q", "omega_dot_f_r",
    "u_f0", "u_f1", "u_f2", "u_f3", "u_c0", "u_c1", "u_c2", "u_c3",
    "sat0", "sat1", "sat2", "sat3", "alloc_iter", "alloc_converged", "thrust_pitch_gate",
    "equal_gains", "near_singular", "thrust_floor", "T_f",
)
N_CTRL_LOG = len(CTRL_LOG)
CL = {name: i for i, name in enumerate(CTRL_LOG)}


@dataclass
class ControllerConfig:
    """Controller tunables; defaults are the published values where one exists."""

    dt: float = 0.002
    mass: float = 1.2
    K_omega: tuple = (28.0, 28.0, 28.0)
    K_eta_hover: tuple = (7.6, 13.3, 7.6)
    K_eta_fast: tuple = (7.6, 7.6, 7.6)
    v_equalize: float = 12.0
    equalize_hysteresis: float = 1.0
    equalize_gains: bool = True
    K_beta: float = 2.0
    c2: float = 0.0
    b2: float = 0.0
    G_flap: float = 1.91e-4
    flap_compensation: bool = True
    theta_eff_scale: float = 1.0
    cos_phi_correction: bool = False
    phi_max_deg: float = 45.0
    theta_max_deg: float = 25.0
    theta_min_deg: float = -90.0
    floor_low: float = 0.42
    floor_high: float = 0.16
    floor_speed: float = 8.0
    gamma: float = DEFAULT_GAMMA
    u_scale: float = DEFAULT_U_SCALE
    imax: int = DEFAULT_IMAX
    a_flap: float = 0.1
    a_motor: float = 0.045
    flap_rate_deg: float = 272.0
    v_floor_turn: float = 10.0
    outer_divider: int = 1
    g: float = 9.81
    lowpass_hz: float = 5.0
    highpass_hz: float = 0.5
    Wv: tuple = tuple(DEFAULT_WV)
    Wu: tuple = (1.0, 1.0, 1.0, 1.0)
    schedule: np.ndarray = field(default_factory=lambda: DEFAULT_SCHEDULE.copy())

    def pack(self) -> np.ndarray:
        p = np.zeros(N_CPARAM)
        p[C_DT] = self.dt
        p[C_M] = self.mass
        p[C_KO:C_KO + 3] = self.K_omega
        p[C_KEH:C_KEH + 3] = self.K_eta_hover
        p[C_KEF:C_KEF + 3] = self.K_eta_fast
        p[C_VEQ] = self.v_equalize
        p[C_HYST] = self.equalize_hysteresis
        p[C_EQUALIZE] = float(self.equalize_gains)
        p[C_KBETA] = self.K_beta
        p[C_C2] = self.c2
        p[C_B2] = self.b2
        p[C_GFLAP] = self.G_flap
        p[C_COMP] = float(self.flap_compensation)
        p[C_TSCALE] = self.theta_eff_scale
        p[C_COSPHI] = float(self.cos_phi_correction)
        p[C_PHIMAX] = math.radians(self.phi_max_deg)
        p[C_THMAX] = math.radians(self.theta_max_deg)
        p[C_THMIN] = math.radians(self.theta_min_deg)
        p[C_FLO] = self.floor_low
        p[C_FHI] = self.floor_high
        p[C_FV] = self.floor_speed
        p[C_GAMMA] = self.gamma
        p[C_USCALE] = self.u_scale
        p[C_IMAX] = self.imax
        p[C_AFLAP] = self.a_flap
        p[C_AMOT] = self.a_motor
        p[C_FRATE] = self.flap_rate_deg / 30.0 * 9600.0
        p[C_VFLOOR] = self.v_floor_turn
        p[C_OUTER_DIV] = max(1, int(self.outer_divider))
        p[C_G] = self.g
        return p


@njit
def k_control_tick(cp, s, Wv, Wu, lp_sos, hp_sos, cs, lp_zi, hp_zi,
                   gyro, acc_b, q, V, V_valid, acc_ref, exc, out):
    """One controller period. Writes commands into cs[CS_UC:CS_UC+4] and the
    log fields into ``out``. Returns False (state untouched) on non-finite input.
    """
    for i in range(3):
        if not (math.isfinite(gyro[i]) and math.isfinite(acc_b[i]) and math.isfinite(acc_ref[i])):
            return False
    for i in range(4):
        if not math.isfinite(q[i]):
            return False
    if not math.isfinite(V):
        return False

    dt = cp[C_DT]
    m = cp[C_M]
    R = np.empty((3, 3))
    k_quat_to_rotmat(q, R)
    phi, theta, psi = k_euler_from_rotmat(R, cs[CS_PSI])
    cs[CS_PSI] = psi

    # controller-side actuator model driven by the previous command
    fstep = cp[C_FRATE] * dt
    for i in range(4):
        a = cp[C_AFLAP] if i < 2 else cp[C_AMOT]
        du = a * (cs[CS_UC + i] - cs[CS_UACT + i])
        if i < 2:
            du = min(fstep, max(-fstep, du))
        cs[CS_UACT + i] += du

    x = np.empty(N_LP)
    for i in range(3):
        x[LP_GYRO + i] = gyro[i]
        x[LP_ACC + i] = R[i, 0] * acc_b[0] + R[i, 1] * acc_b[1] + R[i, 2] * acc_b[2]
    x[LP_ACC + 2] += cp[C_G]
    for i in range(4):
        x[LP_U + i] = cs[CS_UACT + i]
    x[LP_PHI] = phi
    x[LP_THETA] = theta
    x[LP_T] = s[S_THRUST] * (cs[CS_UACT + 2] + cs[CS_UACT + 3]) * m
    x[LP_FY] = acc_b[1]
    hp_in = np.empty(1)
    hp_in[0] = -cs[CS_UACT] + cs[CS_UACT + 1]
    if cs[CS_INIT] < 0.5:
        kernels.sos_steady_state(lp_sos, lp_zi, x)
        kernels.sos_steady_state(hp_sos, hp_zi, hp_in)
    y = np.empty(N_LP)
    kernels.sos_step(lp_sos, lp_zi, x, y)
    omega_f = y[LP_GYRO:LP_GYRO + 3]
    if cs[CS_INIT] < 0.5:
        for i in range(3):
            cs[CS_WPREV + i] = omega_f[i]
        cs[CS_PSI_REF] = psi
        cs[CS_VREF] = phi
        cs[CS_VREF + 1] = theta
        cs[CS_INIT] = 1.0
    omega_dot_f = np.empty(3)
    for i in range(3):
        omega_dot_f[i] = (omega_f[i] - cs[CS_WPREV + i]) / dt
        cs[CS_WPREV + i] = omega_f[i]
    u_f = y[LP_U:LP_U + 4].copy()
    hp_out = np.empty(1)
    u_sum = np.empty(1)
    u_sum[0] = -u_f[0] + u_f[1]
    kernels.sos_step(hp_sos, hp_zi, u_sum, hp_out)

    acc_f = y[LP_ACC:LP_ACC + 3]
    acc_comp = acc_f.copy()
    if cp[C_COMP] > 0.5:
        a = hp_out[0] * cp[C_GFLAP]
        for i in range(3):
            acc_comp[i] -= R[i, 0] * a

    fast = k_gain_fast(cs[CS_FAST] > 0.5, V, V_valid, cp[C_VEQ], cp[C_HYST])
    cs[CS_FAST] = 1.0 if fast else 0.0
    use_fast = fast and cp[C_EQUALIZE] > 0.5

    # outer loop
    tick = int(cs[CS_TICK])
    div = int(cp[C_OUTER_DIV])
    if tick % div == 0:
        dacc = np.empty(3)
        for i in range(3):
            dacc[i] = acc_ref[i] - acc_comp[i]
        inc = np.empty(3)
        ns = k_outer_increment(dacc, y[LP_PHI], y[LP_THETA], psi, V, V_valid, m, s,
                               cp[C_TSCALE], cp[C_COSPHI] > 0.5, inc)
        cs[CS_NEAR_SING] = 1.0 if ns else 0.0
        pr = y[LP_PHI] + inc[0]
        tr = y[LP_THETA] + inc[1]
        cs[CS_VREF] = min(cp[C_PHIMAX], max(-cp[C_PHIMAX], pr))
        cs[CS_VREF + 1] = min(cp[C_THMAX], max(cp[C_THMIN], tr))
        cs[CS_VREF + 2] = inc[2] / m
    cs[CS_TICK] = tick + 1
    phi_ref = cs[CS_VREF]
    theta_ref = cs[CS_VREF + 1]
    dT = cs[CS_VREF + 2]

    # heading reference
    f_y = y[LP_FY]
    beta_hat = cp[C_C2] * f_y + cp[C_B2]
    V_use = V if V_valid else 0.0
    psi_dot = k_heading_rate(phi_ref, theta_ref, V_use, beta_hat, cp[C_KBETA], cp[C_VFLOOR])
    cs[CS_PSI_DOT] = psi_dot
    cs[CS_PSI_REF] = k_wrap_pi(cs[CS_PSI_REF] + psi_dot * dt)

    # inner loop
    q_ref = k_quat_from_euler(phi_ref, theta_ref, cs[CS_PSI_REF])
    q_err = k_quat_error(q_ref, q)
    nu = np.empty(4)
    omega_ref = np.empty(3)
    for i in range(3):
        ke = cp[C_KEF + i] if use_fast else cp[C_KEH + i]
        omega_ref[i] = ke * q_err[i + 1]
        nu[i] = cp[C_KO + i] * (omega_ref[i] - gyro[i])
    nu[3] = dT
    G = np.empty((4, 4))
    k_build_inner(theta, V, V_valid, u_f, s, G)
    floor = k_thrust_floor(V, V_valid, cp[C_FLO], cp[C_FHI], cp[C_FV], 9600.0)
    u_c = np.empty(4)
    for i in range(4):
        u_c[i] = cs[CS_UC + i]
    ws, it, ok, finite = k_inner_step(nu, omega_dot_f, u_f, G, floor, Wv, Wu, cp[C_GAMMA], cp[C_USCALE],
                                      int(cp[C_IMAX]), u_c)
    if not finite:
        return False
    for i in range(4):
        v = u_c[i] + exc[i]
        if i < 2:
            v = min(9600.0, max(-9600.0, v))
        else:
            v = min(9600.0, max(floor, v))
        cs[CS_UC + i] = v

    out[0] = y[LP_PHI]
    out[1] = y[LP_THETA]
    out[2] = psi
    out[3] = phi_ref
    out[4] = theta_ref
    out[5] = cs[CS_PSI_REF]
    out[6] = psi_dot
    out[7] = dT
    out[8] = beta_hat
    out[9] = f_y
    for i in range(3):
        out[10 + i] = acc_ref[i]
        out[13 + i] = acc_f[i]
        out[16 + i] = acc_comp[i]
    out[19] = hp_out[0]
    out[20] = R[0, 0] * acc_f[0] + R[1, 0] * acc_f[1] + R[2, 0] * acc_f[2]
    for i in range(4):
        out[21 + i] = nu[i]
    for i in range(3):
        out[25 + i] = omega_ref[i]
        out[28 + i] = omega_f[i]
        out[31 + i] = omega_dot_f[i]
    for i in range(4):
        out[34 + i] = u_f[i]
        out[38 + i] = cs[CS_UC + i]
        out[42 + i] = ws[i]
    out[46] = it
    out[47] = 1.0 if ok else 0.0
    out[48] = 1.0 if G[1, 2] != 0.0 else 0.0
    out[49] = 1.0 if use_fast else 0.0
    out[50] = cs[CS_NEAR_SING]
    out[51] = floor
    out[52] = y[LP_T]
    return True


class Controller:
    """Owns the controller arrays and runs single ticks from Python."""

    def __init__(self, config: ControllerConfig | None = None, u0=None):
        self.config = config or ControllerConfig()
        c = self.config
        self.cp = c.pack()
        self.schedule = np.asarray(c.schedule, dtype=float)
        self.Wv = np.asarray(c.Wv, dtype=float)
        self.Wu = np.asarray(c.Wu, dtype=float)
        fs = 1.0 / c.dt
        self.lp_sos = butter2_lowpass_sos(c.lowpass_hz, fs)
        self.hp_sos = butter4_highpass_sos(c.highpass_hz, fs)
        self.cs = np.zeros(N_CSTATE)
        if u0 is not None:
            self.cs[CS_UC:CS_UC + 4] = u0
            self.cs[CS_UACT:CS_UACT + 4] = u0
        self.lp_zi = np.zeros((self.lp_sos.shape[0], 2, N_LP))
        self.hp_zi = np.zeros((self.hp_sos.shape[0], 2, 1))
        self.out = np.zeros(N_CTRL_LOG)

    @property
    def u_c(self) -> np.ndarray:
        return self.cs[CS_UC:CS_UC + 4].copy()

    def step(self, gyro, acc_b, q, V: float, V_valid: bool, acc_ref, exc=None) -> np.ndarray:
        ok = k_control_tick(
            self.cp, self.schedule, self.Wv, self.Wu, self.lp_sos, self.hp_sos, self.cs, self.lp_zi, self.hp_zi,
            np.asarray(gyro, dtype=float), np.asarray(acc_b, dtype=float), np.asarray(q, dtype=float),
            float(V), bool(V_valid), np.asarray(acc_ref, dtype=float),
            np.zeros(4) if exc is None else np.asarray(exc, dtype=float), self.out,
        )
        if not ok:
            raise NumericalFault("non-finite controller input; previous command held")
        return self.u_c

    def log(self) -> dict:
        return {name: float(self.out[i]) for i, name in enumerate(CTRL_LOG)}
