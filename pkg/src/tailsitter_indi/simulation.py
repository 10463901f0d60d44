"""Closed-loop runner: plant, sensors, controller and guidance on one time grid.

The 500 Hz part (sense, control tick, plant step, log row) runs in a jitted
chunk kernel. Guidance, GNSS and the noise draws run in Python once per
chunk, so a seed fixes the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._accel import njit
from .controller import (CS_PSI, CTRL_LOG, N_CTRL_LOG, Controller, ControllerConfig, k_control_tick)
from .errors import NumericalFault
from .frames import k_euler_from_rotmat, k_quat_to_rotmat, quat_from_euler_zxy
from .guidance import FlightPlan, Guidance, GuidanceGains, Hover
from .sim.plant import (DEFAULT_PLANT, N_STATE, PP_DT, X_POS, X_Q, X_U, X_VEL, X_W, hover_command,
                        initial_state, k_air_data, k_plant_step)
from .sim.sensors import N_NOISE, Gnss, SensorConfig, k_sense
from .sim.wind import WindConfig, wind_field

TRUTH_COLUMNS = (
    "t", "pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d", "qw", "qx", "qy", "qz",
    "phi", "theta", "psi", "p", "q", "r", "u_act0", "u_act1", "u_act2", "u_act3",
    "V", "alpha", "beta", "wind_n", "wind_e", "wind_d",
    "gyro_p", "gyro_q", "gyro_r", "acc_x", "acc_y", "acc_z", "V_meas", "V_valid",
)
GUIDANCE_COLUMNS = ("mode", "element", "cross_track", "v_des_n", "v_des_e", "v_des_d", "wind_est_n", "wind_est_e")
N_TRUTH = len(TRUTH_COLUMNS)
N_KERNEL_COLUMNS = N_TRUTH + N_CTRL_LOG
COLUMNS = TRUTH_COLUMNS + CTRL_LOG + GUIDANCE_COLUMNS
N_COLUMNS = len(COLUMNS)
COL = {name: i for i, name in enumerate(COLUMNS)}


@njit
def k_run_chunk(x, p, sp, cp, s, Wv, Wu, lp_sos, hp_sos, cs, lp_zi, hp_zi,
                acc_ref, wind, noise, exc, log, row0):
    """Advance ``wind.shape[0]`` ticks. Returns the number of completed ticks;
    fewer than requested means a non-finite value stopped the run.
    """
    n = wind.shape[0]
    meas = np.empty(8)
    ctrl = np.empty(N_CTRL_LOG)
    R = np.empty((3, 3))
    for k in range(n):
        w = wind[k]
        k_sense(x, w, p, sp, noise[k], meas)
        ok = k_control_tick(cp, s, Wv, Wu, lp_sos, hp_sos, cs, lp_zi, hp_zi,
                            meas[0:3], meas[3:6], x[X_Q:X_Q + 4], meas[6], meas[7] > 0.5,
                            acc_ref, exc[k], ctrl)
        if not ok:
            return k
        r = log[row0 + k]
        r[0] = x[17]
        for i in range(3):
            r[1 + i] = x[X_POS + i]
            r[4 + i] = x[X_VEL + i]
        for i in range(4):
            r[7 + i] = x[X_Q + i]
        k_quat_to_rotmat(x[X_Q:X_Q + 4], R)
        phi, theta, psi = k_euler_from_rotmat(R, cs[CS_PSI])
        r[11] = phi
        r[12] = theta
        r[13] = psi
        for i in range(3):
            r[14 + i] = x[X_W + i]
        for i in range(4):
            r[17 + i] = x[X_U + i]
        u_a, v_a, w_a, V, alpha, beta = k_air_data(x, w)
        r[21] = V
        r[22] = alpha
        r[23] = beta
        for i in range(3):
            r[24 + i] = w[i]
        for i in range(8):
            r[27 + i] = meas[i]
        for i in range(N_CTRL_LOG):
            r[N_TRUTH + i] = ctrl[i]
        k_plant_step(x, cs[0:4], w, p)
        for i in range(N_STATE):
            if not math.isfinite(x[i]):
                return k
    return n


@dataclass
class SimConfig:
    duration: float = 30.0
    seed: int = 0
    plant: np.ndarray = field(default_factory=lambda: DEFAULT_PLANT.copy())
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    wind: WindConfig = field(default_factory=WindConfig)
    plan: FlightPlan | None = None
    gains: GuidanceGains = field(default_factory=GuidanceGains)
    guidance_divider: int = 10
    # optional overrides used by targeted experiments
    acc_ref_fn: Callable[[float], np.ndarray] | None = None
    excitation_fn: Callable[[np.ndarray], np.ndarray] | None = None
    initial: np.ndarray | None = None


@dataclass
class SimResult:
    log: np.ndarray
    columns: tuple
    mode_changes: list
    fault: str | None = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.log[:, COL[name]]

    @property
    def t(self) -> np.ndarray:
        return self["t"]


def default_initial_state(cfg: SimConfig) -> np.ndarray:
    uh = hover_command(cfg.plant)
    pos = (0.0, 0.0, -40.0)
    psi = 0.0
    if cfg.plan is not None and len(cfg.plan) and isinstance(cfg.plan.elements[0], Hover):
        el = cfg.plan.elements[0]
        pos = tuple(el.point)
        psi = 0.0 if el.heading is None else float(el.heading)
    q = quat_from_euler_zxy((0.0, 0.0, psi))
    return initial_state(pos=pos, q=q, u=(0.0, 0.0, uh, uh))


def _nose(q) -> np.ndarray:
    R = np.empty((3, 3))
    k_quat_to_rotmat(np.asarray(q, dtype=float), R)
    return -R[:, 2]


def simulate(cfg: SimConfig, raise_on_fault: bool = True) -> SimResult:
    """Run one closed-loop simulation and return the 500 Hz log."""
    p = np.asarray(cfg.plant, dtype=float)
    dt = float(p[PP_DT])
    if abs(dt - cfg.controller.dt) > 1e-12:
        raise ValueError("plant and controller periods differ")
    n_ticks = int(round(cfg.duration / dt))
    x = np.array(cfg.initial if cfg.initial is not None else default_initial_state(cfg), dtype=float)
    ctrl = Controller(cfg.controller, u0=x[X_U:X_U + 4])
    R = np.empty((3, 3))
    k_quat_to_rotmat(x[X_Q:X_Q + 4], R)
    ctrl.cs[CS_PSI] = k_euler_from_rotmat(R, 0.0)[2]
    sp = cfg.sensors.pack()

    ss = np.random.SeedSequence(cfg.seed)
    rng_sensor, rng_gnss = (np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(2))
    gnss = Gnss(cfg.sensors, rng_gnss)
    div = max(1, int(cfg.guidance_divider))
    guidance = None
    if cfg.acc_ref_fn is None:
        plan = cfg.plan or FlightPlan([Hover(x[X_POS:X_POS + 3].copy())])
        guidance = Guidance(plan, cfg.gains, dt=div * dt)

    log = np.zeros((n_ticks, N_COLUMNS))
    kernel_log = np.zeros((n_ticks, N_KERNEL_COLUMNS))
    V_meas, V_valid = 0.0, False
    fault = None
    k0 = 0
    acc_ref = np.zeros(3)
    g_cols = np.full(len(GUIDANCE_COLUMNS), np.nan)
    while k0 < n_ticks:
        n = min(div, n_ticks - k0)
        t = k0 * dt
        pos, vel = gnss.update(t, x[X_POS:X_POS + 3], x[X_VEL:X_VEL + 3])
        if guidance is not None:
            out = guidance.step(t, pos, vel, V_meas, V_valid, _nose(x[X_Q:X_Q + 4]))
            acc_ref = out.acc_ref
            g_cols[:] = (out.mode, out.element, out.cross_track, *out.v_des, *guidance.wind[:2])
        else:
            acc_ref = np.asarray(cfg.acc_ref_fn(t), dtype=float)
        tt = (k0 + np.arange(n)) * dt
        wind = np.ascontiguousarray(wind_field(tt, cfg.wind).reshape(n, 3))
        noise = rng_sensor.standard_normal((n, N_NOISE))
        exc = np.zeros((n, 4)) if cfg.excitation_fn is None else np.asarray(cfg.excitation_fn(tt), dtype=float)
        done = k_run_chunk(x, p, sp, ctrl.cp, ctrl.schedule, ctrl.Wv, ctrl.Wu, ctrl.lp_sos, ctrl.hp_sos,
                           ctrl.cs, ctrl.lp_zi, ctrl.hp_zi, acc_ref, wind, noise, exc, kernel_log, k0)
        log[k0:k0 + done, len(TRUTH_COLUMNS) + N_CTRL_LOG:] = g_cols
        if done < n:
            fault = f"non-finite state at t={(k0 + done) * dt:.3f} s; state={x.tolist()}"
            k0 += done
            break
        last = kernel_log[k0 + n - 1]
        V_meas, V_valid = last[COL["V_meas"]], last[COL["V_valid"]] > 0.5
        k0 += n
    log[:, :N_KERNEL_COLUMNS] = kernel_log
    log = log[:k0]
    result = SimResult(log, COLUMNS, guidance.mode_changes if guidance is not None else [], fault)
    if fault is not None and raise_on_fault:
        err = NumericalFault(fault)
        err.result = result
        raise err
    return result


def pitch_tracking_rms(result: SimResult, exclude_saturation: bool = True, t_min: float = 0.0) -> float:
    """RMS of theta_ref - theta (deg) over unsaturated ticks after ``t_min``."""
    e = np.degrees(result["theta_ref"] - result["theta"])
    mask = result.t >= t_min
    if exclude_saturation:
        sat = np.zeros(len(e), dtype=bool)
        for i in range(4):
            sat |= result[f"sat{i}"] != 0.0
        mask &= ~sat
    if not mask.any():
        return float("nan")
    return float(math.sqrt(np.mean(e[mask] ** 2)))
