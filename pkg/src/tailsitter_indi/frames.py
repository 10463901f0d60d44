"""Quaternion and ZXY-Euler kinematics, body/NED conversions.

Conventions
-----------
Quaternions are numpy arrays ``[w, x, y, z]`` (Hamilton product) describing
the rotation from body axes to NED axes, so ``v_ned = R(q) @ v_body``.
Euler angles use the ZXY sequence: ``R = Rz(psi) @ Rx(phi) @ Ry(theta)``,
which keeps -90 deg pitch regular and puts the singularity at +-90 deg roll.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._accel import njit

BODY = "body"
NED = "ned"
_FRAMES = (BODY, NED)

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


class EulerZXY(NamedTuple):
    phi: float  # roll about X
    theta: float  # pitch about Y
    psi: float  # yaw about Z


class FrameMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Vec3:
    """A 3-vector tagged with the frame it is expressed in."""

    value: np.ndarray
    frame: str

    def __post_init__(self):
        if self.frame not in _FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float).reshape(3))

    def _check(self, other: "Vec3") -> None:
        if not isinstance(other, Vec3):
            raise TypeError("frame-tagged vectors only combine with each other")
        if other.frame != self.frame:
            raise FrameMismatchError(f"cannot combine {self.frame} and {other.frame} vectors")

    def __add__(self, other: "Vec3") -> "Vec3":
        self._check(other)
        return Vec3(self.value + other.value, self.frame)

    def __sub__(self, other: "Vec3") -> "Vec3":
        self._check(other)
        return Vec3(self.value - other.value, self.frame)

    def __mul__(self, k: float) -> "Vec3":
        return Vec3(self.value * float(k), self.frame)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.value, self.frame)


def to_ned(v: Vec3, rot_nb: np.ndarray) -> Vec3:
    if v.frame != BODY:
        raise FrameMismatchError(f"expected a body vector, got {v.frame}")
    return Vec3(rot_nb @ v.value, NED)


def to_body(v: Vec3, rot_nb: np.ndarray) -> Vec3:
    if v.frame != NED:
        raise FrameMismatchError(f"expected a NED vector, got {v.frame}")
    return Vec3(rot_nb.T @ v.value, BODY)


def rotmat_ned_from_body(eta) -> np.ndarray:
    """Body-to-NED rotation matrix of a ZXY Euler triple, in closed form."""
    phi, theta, psi = eta
    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    return np.array(
        [
            [ct * cp - sf * st * sp, -cf * sp, st * cp + sf * ct * sp],
            [ct * sp + sf * st * cp, cf * cp, st * sp - sf * ct * cp],
            [-cf * st, sf, cf * ct],
        ]
    )


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = math.sqrt(float(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]))
    if n < 1e-12:
        return IDENTITY.copy()
    return np.asarray(q, dtype=float) / n


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Pick the representative with w >= 0."""
    return -q if q[0] < 0.0 else q


def quat_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    return np.concatenate(([math.cos(h)], math.sin(h) * axis))


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_euler_zxy(eta) -> np.ndarray:
    phi, theta, psi = eta
    qz = np.array([math.cos(0.5 * psi), 0.0, 0.0, math.sin(0.5 * psi)])
    qx = np.array([math.cos(0.5 * phi), math.sin(0.5 * phi), 0.0, 0.0])
    qy = np.array([math.cos(0.5 * theta), 0.0, math.sin(0.5 * theta), 0.0])
    return quat_mul(quat_mul(qz, qx), qy)


def euler_zxy_from_rotmat(R: np.ndarray, psi_hint: float = 0.0) -> EulerZXY:
    """Extract ZXY angles; at |phi| = pi/2 keep ``psi_hint`` and solve theta."""
    sphi = min(1.0, max(-1.0, float(R[2, 1])))
    phi = math.asin(sphi)
    cphi = math.cos(phi)
    if cphi > 1e-9:
        theta = math.atan2(-R[2, 0], R[2, 2])
        psi = math.atan2(-R[0, 1], R[1, 1])
        return EulerZXY(phi, theta, psi)
    # gimbal lock: Rz(psi)^T R = Rx(phi) Ry(theta); row 0 gives theta
    psi = psi_hint
    cp, sp = math.cos(psi), math.sin(psi)
    r00 = cp * R[0, 0] + sp * R[1, 0]
    r02 = cp * R[0, 2] + sp * R[1, 2]
    theta = math.atan2(r02, r00)
    return EulerZXY(phi, theta, psi)


def euler_zxy_from_quat(q: np.ndarray, psi_hint: float = 0.0) -> EulerZXY:
    return euler_zxy_from_rotmat(quat_to_rotmat(q), psi_hint)


def quat_error(q_ref: np.ndarray, q_s: np.ndarray) -> np.ndarray:
    """Attitude error taking the current attitude onto the reference.

    The vector part is expressed in current body axes (what the rate loop
    needs) and the result is sign-canonicalized to the shortest rotation.
    """
    return quat_canonical(quat_normalize(quat_mul(quat_conj(q_s), q_ref)))


def wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


# ------------------------------------------------ jitted twins for the closed loop


@njit
def k_wrap_pi(a):
    b = a + math.pi
    a = b - 2.0 * math.pi * math.floor(b / (2.0 * math.pi))
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@njit
def k_quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit
def k_quat_from_euler(phi, theta, psi):
    qz = np.array([math.cos(0.5 * psi), 0.0, 0.0, math.sin(0.5 * psi)])
    qx = np.array([math.cos(0.5 * phi), math.sin(0.5 * phi), 0.0, 0.0])
    qy = np.array([math.cos(0.5 * theta), 0.0, math.sin(0.5 * theta), 0.0])
    return k_quat_mul(k_quat_mul(qz, qx), qy)


@njit
def k_quat_to_rotmat(q, R):
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
def k_euler_from_rotmat(R, psi_hint):
    sphi = min(1.0, max(-1.0, R[2, 1]))
    phi = math.asin(sphi)
    if math.cos(phi) > 1e-9:
        return phi, math.atan2(-R[2, 0], R[2, 2]), math.atan2(-R[0, 1], R[1, 1])
    cp, sp = math.cos(psi_hint), math.sin(psi_hint)
    theta = math.atan2(cp * R[0, 2] + sp * R[1, 2], cp * R[0, 0] + sp * R[1, 0])
    return phi, theta, psi_hint


@njit
def k_quat_error(q_ref, q_s):
    qc = np.array([q_s[0], -q_s[1], -q_s[2], -q_s[3]])
    e = k_quat_mul(qc, q_ref)
    n = math.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + e[3] * e[3])
    if n < 1e-12:
        e[:] = 0.0
        e[0] = 1.0
        return e
    s = 1.0 / n
    if e[0] < 0.0:
        s = -s
    for i in range(4):
        e[i] *= s
    return e
