"""Outer-loop INDI: acceleration error to increments of [phi, theta, T].

    v = v_f + m (G_T + G_L)^-1 (acc_ref - acc_f)

The measured NED acceleration (specific force rotated to NED plus gravity)
is low-passed with the same filter as v_f, and optionally corrected for the
transient lift of the flaps before the increment is formed.
"""

from __future__ import annotations

import math

import numpy as np

from . import frames
from ._accel import njit
from .effectiveness import DEFAULT_SCHEDULE, k_build_outer, k_lift_slope, k_lift_trim, k_thrust_trim
from .filters import Butter4Highpass

COND_MAX = 1e6
TIKHONOV = 1e-6
THETA_MIN = -0.5 * math.pi
THETA_MAX = math.radians(25.0)
PHI_MAX = math.radians(45.0)


@njit
def k_inv3(A, out):
    """Cofactor inverse of a 3x3 matrix; returns the determinant."""
    c00 = A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    c01 = A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2]
    c02 = A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]
    det = A[0, 0] * c00 + A[0, 1] * c01 + A[0, 2] * c02
    if det == 0.0:
        return 0.0
    inv = 1.0 / det
    out[0, 0] = c00 * inv
    out[1, 0] = c01 * inv
    out[2, 0] = c02 * inv
    out[0, 1] = (A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2]) * inv
    out[1, 1] = (A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]) * inv
    out[2, 1] = (A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1]) * inv
    out[0, 2] = (A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]) * inv
    out[1, 2] = (A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]) * inv
    out[2, 2] = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) * inv
    return det


@njit
def k_frob(A):
    s = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            s += A[i, j] * A[i, j]
    return math.sqrt(s)


@njit
def k_solve_outer(G, rhs, out):
    """out = G^-1 rhs, or a Tikhonov-regularized solve when G is near singular.

    The condition number is estimated as ||G||_F ||G^-1||_F (an upper bound
    on the 2-norm condition). Returns True when regularization was used.
    """
    Ginv = np.empty((3, 3))
    det = k_inv3(G, Ginv)
    near_singular = det == 0.0 or not math.isfinite(det)
    if not near_singular:
        near_singular = k_frob(G) * k_frob(Ginv) > COND_MAX
    if near_singular:
        GtG = np.empty((3, 3))
        tr = 0.0
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    acc += G[k, i] * G[k, j]
                GtG[i, j] = acc
            tr += GtG[i, i]
        lam = TIKHONOV * tr + 1e-300
        for i in range(3):
            GtG[i, i] += lam
        k_inv3(GtG, Ginv)
        for i in range(3):
            acc = 0.0
            for k in range(3):
                tmp = 0.0
                for j in range(3):
                    tmp += Ginv[i, j] * G[k, j]
                acc += tmp * rhs[k]
            out[i] = acc
    else:
        for i in range(3):
            out[i] = Ginv[i, 0] * rhs[0] + Ginv[i, 1] * rhs[1] + Ginv[i, 2] * rhs[2]
    return near_singular


@njit
def k_outer_increment(dacc, phi, theta, psi, V, V_valid, m, s, theta_scale, cos_phi_correction, out):
    """Increment [dphi, dtheta, dT(N)] for an acceleration error ``dacc``."""
    L = k_lift_trim(theta, m, phi, cos_phi_correction)
    T = k_thrust_trim(theta, m)
    dL = k_lift_slope(theta, V, V_valid, m, s)
    G = np.empty((3, 3))
    k_build_outer(phi, theta, psi, T, L, dL, G)
    for i in range(3):
        G[i, 1] *= theta_scale
    rhs = np.empty(3)
    for i in range(3):
        rhs[i] = m * dacc[i]
    return k_solve_outer(G, rhs, out)


@njit
def k_flap_comp_vector(R, hp_value, G_flap, out):
    """R @ [hp * G_flap, 0, 0]."""
    a = hp_value * G_flap
    for i in range(3):
        out[i] = R[i, 0] * a


def compensate_flap_lift(xi_ddot_f, hp_value: float, G_flap: float, M_NB) -> np.ndarray:
    """Subtract the modeled, high-passed flap lift from the filtered NED acceleration.

    ``hp_value`` is the high-passed sum channel HP(-u_f0 + u_f1).
    """
    corr = np.empty(3)
    k_flap_comp_vector(np.asarray(M_NB, dtype=float), float(hp_value), float(G_flap), corr)
    return np.asarray(xi_ddot_f, dtype=float) - corr


class FlapLiftCompensator:
    def __init__(self, G_flap: float, cutoff_hz: float = 0.5, sample_hz: float = 500.0):
        self.G_flap = G_flap
        self.hp = Butter4Highpass(cutoff_hz, sample_hz)
        self.hp_value = 0.0

    def step(self, xi_ddot_f, u_f0: float, u_f1: float, M_NB) -> np.ndarray:
        self.hp_value = self.hp.step(-u_f0 + u_f1)
        return compensate_flap_lift(xi_ddot_f, self.hp_value, self.G_flap, M_NB)


def clamp_attitude(phi: float, theta: float, phi_max: float = PHI_MAX,
                   theta_min: float = THETA_MIN, theta_max: float = THETA_MAX) -> tuple[float, float]:
    return min(phi_max, max(-phi_max, phi)), min(theta_max, max(theta_min, theta))


def outer_indi_step(xi_ddot_ref, xi_ddot_comp, v_f, eta, V: float, m: float = 1.2, V_valid: bool = True,
                    schedule=None, theta_scale: float = 1.0, cos_phi_correction: bool = False,
                    clamp: bool = True):
    """Return (v, near_singular) with v = [phi, theta, T] (T in N).

    ``eta`` supplies the attitude where G_T + G_L is evaluated; ``v_f`` is the
    filtered [phi, theta, T] the increment is added to.
    """
    s = DEFAULT_SCHEDULE if schedule is None else np.asarray(schedule, dtype=float)
    dacc = np.asarray(xi_ddot_ref, dtype=float) - np.asarray(xi_ddot_comp, dtype=float)
    inc = np.empty(3)
    phi, theta, psi = eta
    flag = k_outer_increment(dacc, float(phi), float(theta), float(psi), float(V), bool(V_valid), float(m), s,
                             float(theta_scale), bool(cos_phi_correction), inc)
    v = np.asarray(v_f, dtype=float) + inc
    if clamp:
        v[0], v[1] = clamp_attitude(v[0], v[1])
    return v, bool(flag)


def reference_attitude(phi: float, theta: float, psi_ref: float) -> np.ndarray:
    """Quaternion reference for the inner loop from the outer-loop Euler output."""
    return frames.quat_from_euler_zxy((phi, theta, psi_ref))
