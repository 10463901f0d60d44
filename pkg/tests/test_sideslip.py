import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailsitter_indi.frames import wrap_pi
from tailsitter_indi.sideslip import (
    HeadingReference, SideslipEstimator, clamp_pitch_ref, estimate_beta, estimate_beta_v2, heading_error_series,
    heading_rate_ref, phi_t,
)


def test_estimate_beta_examples():
    assert estimate_beta(0.05 / 0.2, -0.2, 0.05) == pytest.approx(0.0, abs=1e-15)
    assert estimate_beta(2.0, 0.05, 0.0) == pytest.approx(0.1, abs=1e-15)
    assert math.isfinite(estimate_beta(3.0, -0.14, 0.01))  # no airspeed in the law
    with pytest.raises(ZeroDivisionError):
        estimate_beta_v2(3.0, 0.0, 1.0, 0.0)


def test_phi_t_branches():
    assert phi_t(0.2, -0.5) == 0.2
    assert phi_t(0.1, 0.3) == 0.3
    assert phi_t(-0.1, 0.3) == -0.3
    assert phi_t(0.0, 0.3) == 0.0
    assert phi_t(0.5, 0.3) == 0.5


def test_heading_rate():
    assert heading_rate_ref(0.0, -1.0, 20.0, 0.0) == 0.0
    assert heading_rate_ref(math.radians(30), -1.0, 20.0, 0.0) == pytest.approx(9.81 * math.tan(math.radians(30)) / 20)
    assert heading_rate_ref(math.radians(30), -1.0, 20.0, 0.0) == pytest.approx(0.2832, abs=5e-5)
    assert heading_rate_ref(0.3, -1.0, 5.0, 0.0) == pytest.approx(9.81 * math.tan(0.3) / 10.0)
    assert heading_rate_ref(0.0, -1.0, 20.0, 0.1, K_beta=2.0) == pytest.approx(0.2)


def test_pitch_clamp():
    assert clamp_pitch_ref(math.radians(40)) == pytest.approx(math.radians(25))
    assert clamp_pitch_ref(math.radians(-80)) == math.radians(-80)
    assert clamp_pitch_ref(math.radians(25)) == math.radians(25)


@given(st.floats(-math.pi, math.pi), st.floats(-1.0, 1.0), st.floats(0.0, 30.0))
def test_heading_integration_wraps(psi0, rate, T):
    h = HeadingReference(psi0, dt=0.002)
    out = h.advance(rate, T)
    n = int(round(T / 0.002))
    assert -math.pi < out <= math.pi
    assert abs(wrap_pi(out - (psi0 + rate * n * 0.002))) < 1e-9


def test_estimator_filters_then_maps():
    est = SideslipEstimator(-0.14, 0.01)
    for _ in range(3000):
        b = est.step(1.5)
    assert b == pytest.approx(-0.14 * 1.5 + 0.01, rel=1e-9)


def test_heading_error_series_wraps():
    e = heading_error_series([math.pi - 0.1, -math.pi + 0.1], math.pi)
    assert np.allclose(e, 0.1)
