"""Sensor models sampled on the control grid.

The AHRS attitude is ideal; gyro, accelerometer and pitot carry white noise
drawn from a seeded ``numpy.random.Generator`` outside the jitted loop, so
a seed fixes every noise stream regardless of the numba switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._accel import njit
from .plant import X_Q, X_W, k_air_data, k_specific_force

SN_GYRO = 0  # sigma, rad/s
SN_ACC = 1  # sigma, m/s^2
SN_PITOT = 2  # sigma, m/s
SN_V_MIN = 3
SN_ALPHA_MAX = 4  # rad
N_SENSOR = 5
N_NOISE = 7  # standard normals per tick: gyro 3, accel 3, pitot 1


@dataclass
class SensorConfig:
    gyro_sigma: float = 0.005
    accel_sigma: float = 0.05
    pitot_sigma: float = 0.1
    pitot_v_min: float = 6.0
    pitot_alpha_max_deg: float = 30.0
    gnss_rate_hz: float = 10.0
    gnss_latency_s: float = 0.05
    gnss_pos_sigma: float = 0.0
    gnss_vel_sigma: float = 0.0

    def pack(self) -> np.ndarray:
        return np.array([self.gyro_sigma, self.accel_sigma, self.pitot_sigma, self.pitot_v_min,
                         math.radians(self.pitot_alpha_max_deg)])

    @classmethod
    def noiseless(cls) -> "SensorConfig":
        return cls(gyro_sigma=0.0, accel_sigma=0.0, pitot_sigma=0.0)


@njit
def k_pitot_valid(V, alpha, v_min, alpha_max):
    return V >= v_min and abs(alpha) <= alpha_max


@njit
def k_sense(x, wind, p, sp, noise, out):
    """out = [gyro(3), accel(3), V_meas, V_valid]."""
    u = x[13:17].copy()
    f = np.empty(3)
    k_specific_force(x, u, wind, p, f)
    for i in range(3):
        out[i] = x[X_W + i] + sp[SN_GYRO] * noise[i]
        out[3 + i] = f[i] + sp[SN_ACC] * noise[3 + i]
    u_a, v_a, w_a, V, alpha, beta = k_air_data(x, wind)
    valid = k_pitot_valid(V, alpha, sp[SN_V_MIN], sp[SN_ALPHA_MAX])
    out[6] = max(0.0, V + sp[SN_PITOT] * noise[6]) if valid else 0.0
    out[7] = 1.0 if valid else 0.0


def sense(state, sensors: SensorConfig | None = None, rng: np.random.Generator | None = None,
          wind=(0.0, 0.0, 0.0), plant_params=None) -> dict:
    """One sensor snapshot; ``rng=None`` gives noiseless readings."""
    from .plant import DEFAULT_PLANT

    sensors = sensors or SensorConfig()
    p = DEFAULT_PLANT if plant_params is None else np.asarray(plant_params, dtype=float)
    noise = np.zeros(N_NOISE) if rng is None else rng.standard_normal(N_NOISE)
    out = np.empty(8)
    x = np.asarray(state, dtype=float)
    k_sense(x, np.asarray(wind, dtype=float), p, sensors.pack(), noise, out)
    return dict(gyro=out[0:3], accel=out[3:6], airspeed=out[6], airspeed_valid=bool(out[7] > 0.5),
                q=x[X_Q:X_Q + 4].copy())


class Gnss:
    """Position/velocity fixes at a fixed rate, delivered after a latency."""

    def __init__(self, cfg: SensorConfig, rng: np.random.Generator):
        self.period = 1.0 / cfg.gnss_rate_hz
        self.latency = cfg.gnss_latency_s
        self.pos_sigma = cfg.gnss_pos_sigma
        self.vel_sigma = cfg.gnss_vel_sigma
        self.rng = rng
        self.pending: list = []
        self.next_sample = 0.0
        self.latest = None

    def update(self, t: float, pos, vel):
        if t + 1e-9 >= self.next_sample:
            p = np.array(pos, dtype=float)
            v = np.array(vel, dtype=float)
            if self.pos_sigma > 0.0:
                p += self.pos_sigma * self.rng.standard_normal(3)
            if self.vel_sigma > 0.0:
                v += self.vel_sigma * self.rng.standard_normal(3)
            self.pending.append((t + self.latency, p, v))
            self.next_sample += self.period
        while self.pending and self.pending[0][0] <= t + 1e-9:
            self.latest = self.pending.pop(0)[1:]
        if self.latest is None:
            self.latest = (np.array(pos, dtype=float), np.array(vel, dtype=float))
        return self.latest
