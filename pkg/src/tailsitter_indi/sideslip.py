"""Sideslip estimate from the lateral accelerometer and the heading reference.

The heading reference integrates a coordinated-turn feed-forward plus
sideslip feedback:

    psi_dot_ref = g * tan(phi_t) / max(V, 10) + K_beta * beta_hat
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit
from .filters import Butter2Lowpass
from .frames import wrap_pi

G_ACC = 9.81
V_FLOOR = 10.0
THETA_MAX = math.radians(25.0)
K_BETA_DEFAULT = 2.0


@njit
def k_phi_t(phi_ref, theta_ref):
    if theta_ref > 0.0 and abs(phi_ref) < theta_ref:
        if phi_ref > 0.0:
            return theta_ref
        if phi_ref < 0.0:
            return -theta_ref
        return 0.0
    return phi_ref


@njit
def k_heading_rate(phi_ref, theta_ref, V, beta, K_beta, v_floor):
    return G_ACC * math.tan(k_phi_t(phi_ref, theta_ref)) / max(V, v_floor) + K_beta * beta


def estimate_beta(f_y: float, c2: float, b2: float) -> float:
    """beta = c2 * f_y + b2, defined at every airspeed including zero."""
    return c2 * f_y + b2


def estimate_beta_v2(f_y: float, V: float, c1: float, b1: float) -> float:
    """Airspeed-squared form, kept for the identification comparison only."""
    return c1 * f_y / (V * V) + b1


def phi_t(phi_ref: float, theta_ref: float) -> float:
    """Bank used for the turn feed-forward; pitching backward adds to the bank."""
    return k_phi_t(float(phi_ref), float(theta_ref))


def heading_rate_ref(phi_ref: float, theta_ref: float, V: float, beta: float = 0.0,
                     K_beta: float = K_BETA_DEFAULT) -> float:
    return k_heading_rate(float(phi_ref), float(theta_ref), float(V), float(beta), float(K_beta), V_FLOOR)


def clamp_pitch_ref(theta_ref: float, theta_max: float = THETA_MAX) -> float:
    return min(float(theta_ref), theta_max)


class SideslipEstimator:
    def __init__(self, c2: float, b2: float, cutoff_hz: float = 5.0, sample_hz: float = 500.0):
        self.c2 = c2
        self.b2 = b2
        self.lp = Butter2Lowpass(cutoff_hz, sample_hz)
        self.f_y = 0.0

    def step(self, f_y_raw: float) -> float:
        self.f_y = self.lp.step(f_y_raw)
        return estimate_beta(self.f_y, self.c2, self.b2)


class HeadingReference:
    """Integrates psi_dot_ref into psi_ref, wrapped to (-pi, pi]."""

    def __init__(self, psi0: float = 0.0, K_beta: float = K_BETA_DEFAULT, dt: float = 0.002):
        self.psi_ref = wrap_pi(psi0)
        self.K_beta = K_beta
        self.dt = dt
        self.psi_dot_ref = 0.0

    def step(self, phi_ref: float, theta_ref: float, V: float, beta: float) -> float:
        self.psi_dot_ref = heading_rate_ref(phi_ref, theta_ref, V, beta, self.K_beta)
        self.psi_ref = wrap_pi(self.psi_ref + self.psi_dot_ref * self.dt)
        return self.psi_ref

    def advance(self, psi_dot: float, duration: float) -> float:
        """Integrate a constant rate over ``duration`` in whole control periods."""
        n = int(round(duration / self.dt))
        for _ in range(n):
            self.psi_ref = wrap_pi(self.psi_ref + psi_dot * self.dt)
        return self.psi_ref


def heading_error_series(psi, psi_target) -> np.ndarray:
    return np.abs(np.array([wrap_pi(p - psi_target) for p in np.asarray(psi, dtype=float)]))
