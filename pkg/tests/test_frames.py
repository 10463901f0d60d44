import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailsitter_indi import frames
from tailsitter_indi._accel import python_impl
from tailsitter_indi.frames import (BODY, NED, FrameMismatchError, Vec3, euler_zxy_from_quat, quat_axis_angle,
                                    quat_conj, quat_error, quat_from_euler_zxy, quat_mul, quat_normalize,
                                    quat_to_rotmat, rotmat_ned_from_body, to_body, to_ned, wrap_pi)

from conftest import rot_x, rot_y, rot_z

angles = st.floats(-math.pi, math.pi, allow_nan=False)
rolls = st.floats(math.radians(-80), math.radians(80), allow_nan=False)


def test_identity():
    assert np.array_equal(rotmat_ned_from_body((0.0, 0.0, 0.0)), np.eye(3))
    assert np.allclose(quat_from_euler_zxy((0.0, 0.0, 0.0)), [1, 0, 0, 0], atol=0)


def test_pitch_down_points_nose_north():
    # third column of the closed form at theta = -pi/2 is [s(theta), 0, c(theta)] = [-1, 0, 0]
    R = rotmat_ned_from_body((0.0, -math.pi / 2, 0.0))
    assert np.allclose(R[:, 2], [-1.0, 0.0, 0.0], atol=1e-15)
    # the nose is -Z_B, so a -90 deg pitch at zero heading flies North
    assert np.allclose(R @ np.array([0.0, 0.0, -1.0]), [1.0, 0.0, 0.0], atol=1e-15)


def test_closed_form_matches_elementary_composition():
    eta = (0.1, -0.3, 0.7)
    oracle = rot_z(eta[2]) @ rot_x(eta[0]) @ rot_y(eta[1])
    assert np.max(np.abs(rotmat_ned_from_body(eta) - oracle)) < 1e-12


def test_quat_pitch_down_is_axis_angle_about_y():
    q = quat_from_euler_zxy((0.0, -math.pi / 2, 0.0))
    assert np.allclose(q, [math.cos(math.pi / 4), 0.0, -math.sin(math.pi / 4), 0.0], atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(rolls, angles, angles)
def test_euler_quat_rotmat_consistency(phi, theta, psi):
    eta = (phi, theta, psi)
    R = rotmat_ned_from_body(eta)
    assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(R) - 1.0) < 1e-12
    q = quat_from_euler_zxy(eta)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-12
    assert np.max(np.abs(quat_to_rotmat(q) - R)) < 1e-10
    back = euler_zxy_from_quat(q)
    assert abs(back.phi - phi) < 1e-9
    assert abs(wrap_pi(back.theta - theta)) < 1e-9
    assert abs(wrap_pi(back.psi - psi)) < 1e-9


def test_gimbal_lock_keeps_psi_hint():
    R = rotmat_ned_from_body((math.pi / 2, 0.4, 0.3))
    e = frames.euler_zxy_from_rotmat(R, psi_hint=0.3)
    assert e.psi == 0.3
    assert np.allclose(rotmat_ned_from_body(e), R, atol=1e-9)


def test_quat_error_examples():
    q = quat_axis_angle([0.3, -0.2, 0.9], 1.1)
    assert np.allclose(quat_error(q, q), [1, 0, 0, 0], atol=1e-12)
    yaw90 = quat_axis_angle([0, 0, 1], math.pi / 2)
    assert np.allclose(quat_error(yaw90, frames.IDENTITY), yaw90, atol=1e-15)
    # 180 deg + eps: the raw product has w < 0, canonicalization flips it
    q_s = quat_axis_angle([1, 0, 0], math.pi + 0.01)
    err = quat_error(frames.IDENTITY, q_s)
    assert err[0] >= 0.0
    assert abs(np.linalg.norm(err) - 1.0) < 1e-12
    # the error rotates the current attitude onto the reference
    assert np.allclose(quat_to_rotmat(quat_mul(q_s, err)), np.eye(3), atol=1e-12)


def test_quat_error_identity_random(rng):
    for _ in range(1000):
        q = quat_normalize(rng.standard_normal(4))
        assert np.allclose(quat_error(q, q), [1, 0, 0, 0], atol=1e-9)


def test_conjugate_is_inverse(rng):
    for _ in range(100):
        q = quat_normalize(rng.standard_normal(4))
        assert np.allclose(quat_mul(quat_conj(q), q), [1, 0, 0, 0], atol=1e-9)


def test_vec3_frame_tags():
    R = rotmat_ned_from_body((0.0, -math.pi / 2, 0.0))
    b = Vec3([0.0, 0.0, 1.0], BODY)
    n = to_ned(b, R)
    assert n.frame == NED and np.allclose(n.value, [-1, 0, 0])
    assert np.allclose(to_body(n, R).value, b.value)
    with pytest.raises(FrameMismatchError):
        _ = b + n
    with pytest.raises(FrameMismatchError):
        to_ned(n, R)
    assert np.allclose((2.0 * b - b).value, b.value)


@given(st.floats(-100.0, 100.0, allow_nan=False))
def test_wrap_pi_range_and_kernel_agree(a):
    w = wrap_pi(a)
    assert -math.pi < w <= math.pi
    assert abs(math.remainder(w - a, 2 * math.pi)) < 1e-9
    assert abs(python_impl(frames.k_wrap_pi)(a) - w) < 1e-9
    assert abs(frames.k_wrap_pi(a) - w) < 1e-9


def test_wrap_pi_boundary():
    assert wrap_pi(math.pi) == pytest.approx(math.pi)
    assert wrap_pi(-math.pi) == pytest.approx(math.pi)
