import math

import numpy as np
import pytest

from tailsitter_indi.config import load_scenario
from tailsitter_indi.frames import euler_zxy_from_quat, quat_to_rotmat
from tailsitter_indi.scenario import sim_config
from tailsitter_indi.sim.plant import (
    DEFAULT_PLANT, PLANT_FIELDS, PP_RK4, PP_SUBSTEPS, X_Q, X_W, air_data, forces_moments, hover_command,
    initial_state, plant_from_mapping, plant_step,
)
from tailsitter_indi.sim.sensors import Gnss, SensorConfig, sense
from tailsitter_indi.sim.wind import WindConfig, gust_profile, wind_field, wind_from
from tailsitter_indi.simulation import simulate

UH = hover_command()


def test_free_fall():
    x = initial_state()
    for _ in range(50):
        x = plant_step(x, np.zeros(4), params=plant_from_mapping({"rho": 0.0}))
    assert x[5] == pytest.approx(9.81 * 0.1, rel=1e-9)
    assert abs(x[3]) < 1e-12 and abs(x[4]) < 1e-12


def test_hover_trim_is_stationary():
    x0 = initial_state(u=(0, 0, UH, UH))
    x = x0.copy()
    for _ in range(5000):
        x = plant_step(x, (0, 0, UH, UH))
    assert np.allclose(x[0:3], x0[0:3], atol=1e-6)
    assert np.allclose(x[X_W:X_W + 3], 0.0, atol=1e-12)


def test_flap_moments_match_controller_signs():
    # G21 < 0 on (u0 - u1); G31 < 0 on (u0 + u1); motor at +Y has negative roll effectiveness
    _, M = forces_moments(initial_state(), u=(1000, -1000, UH, UH))
    assert M[1] < 0 and abs(M[2]) < 1e-12
    _, M = forces_moments(initial_state(), u=(1000, 1000, UH, UH))
    assert M[2] < 0 and abs(M[1]) < 1e-12
    _, M = forces_moments(initial_state(), u=(0, 0, UH + 500, UH))
    assert M[0] < 0


def _airflow_state(V, alpha):
    # identity attitude: u_a = -v_body_z, w_a = v_body_x
    return initial_state(vel=(V * math.sin(alpha), 0.0, -V * math.cos(alpha)))


def test_pitch_down_moment_grows_with_dynamic_pressure():
    a = math.radians(70)
    ad = air_data(_airflow_state(10.0, a))
    assert ad["alpha"] == pytest.approx(a) and ad["V"] == pytest.approx(10.0)
    _, m10 = forces_moments(_airflow_state(10.0, a), u=np.zeros(4))
    _, m20 = forces_moments(_airflow_state(20.0, a), u=np.zeros(4))
    assert m10[1] < 0 and m20[1] == pytest.approx(4.0 * m10[1], rel=1e-9)


def test_flap_effectiveness_grows_with_motor_command():
    x = initial_state()
    lo = forces_moments(x, u=(1000, -1000, 3000, 3000))[1][1]
    hi = forces_moments(x, u=(1000, -1000, 8000, 8000))[1][1]
    assert hi < lo < 0 and hi / lo > 2.0


def test_flap_lift_gives_inverse_response():
    u = (3000, -3000, UH, UH)
    x = initial_state(u=u)
    F, _ = forces_moments(x)
    assert F[0] < 0  # lift along -X_B: south at hover
    vn = []
    for _ in range(500):
        x = plant_step(x, u)
        vn.append(x[3])
    vn = np.array(vn)
    assert euler_zxy_from_quat(x[X_Q:X_Q + 4]).theta < -0.5  # pitched toward north
    assert vn[:25].min() < -0.01 and vn[-1] > 1.0


def test_torque_free_angular_momentum_conserved():
    p = plant_from_mapping({"rho": 0.0, "damp0_x": 0.0, "damp0_y": 0.0, "damp0_z": 0.0,
                            "dampV_x": 0.0, "dampV_y": 0.0, "dampV_z": 0.0})
    I = np.diag(p[1:4])
    x = initial_state(omega=(2.0, 0.3, -1.0))
    h0 = quat_to_rotmat(x[X_Q:X_Q + 4]) @ I @ x[X_W:X_W + 3]
    e0 = x[X_W:X_W + 3] @ I @ x[X_W:X_W + 3]
    for _ in range(2500):
        x = plant_step(x, np.zeros(4), params=p)
    h = quat_to_rotmat(x[X_Q:X_Q + 4]) @ I @ x[X_W:X_W + 3]
    e = x[X_W:X_W + 3] @ I @ x[X_W:X_W + 3]
    assert np.linalg.norm(h - h0) < 1e-2 * np.linalg.norm(h0)
    assert abs(e - e0) < 1e-2 * e0
    p[PP_RK4], p[PP_SUBSTEPS] = 1.0, 4.0
    x = initial_state(omega=(2.0, 0.3, -1.0))
    for _ in range(2500):
        x = plant_step(x, np.zeros(4), params=p)
    h = quat_to_rotmat(x[X_Q:X_Q + 4]) @ I @ x[X_W:X_W + 3]
    assert np.linalg.norm(h - h0) < 1e-8 * np.linalg.norm(h0)


def test_rk4_cross_check_in_closed_loop():
    sc = load_scenario("transition")
    a = simulate(sim_config(sc, duration=10.0))
    cfg = sim_config(sc, duration=10.0)
    cfg.plant[PP_RK4], cfg.plant[PP_SUBSTEPS] = 1.0, 4.0  # 0.5 ms RK4
    b = simulate(cfg)
    cols = {c: a.columns.index(c) for c in ("pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d")}
    for group in (("pos_n", "pos_e", "pos_d"), ("vel_n", "vel_e", "vel_d")):
        idx = [cols[c] for c in group]
        ref = a.log[:, idx] - a.log[0, idx]
        diff = np.linalg.norm(a.log[:, idx] - b.log[:, idx], axis=1)
        assert diff.max() < 0.01 * np.linalg.norm(ref, axis=1).max(), group


def test_plant_mapping():
    assert len(PLANT_FIELDS) == DEFAULT_PLANT.shape[0]
    with pytest.raises(KeyError):
        plant_from_mapping({"wingspan": 1.0})
    assert plant_step(initial_state(), np.zeros(4)) is not None


def test_sensors():
    x = initial_state(vel=(0.0, 0.0, -4.0), omega=(0.1, 0.2, 0.3), u=(0, 0, UH, UH))
    s = sense(x, SensorConfig.noiseless(), np.random.default_rng(0))
    assert not s["airspeed_valid"] and s["airspeed"] == 0.0
    assert np.array_equal(s["gyro"], [0.1, 0.2, 0.3])
    F, _ = forces_moments(x)
    assert np.allclose(s["accel"], F / 1.2)
    fast = sense(initial_state(vel=(0.0, 0.0, -12.0)), SensorConfig.noiseless())
    assert fast["airspeed_valid"] and fast["airspeed"] == pytest.approx(12.0)
    a = sense(x, SensorConfig(), np.random.default_rng(42))
    b = sense(x, SensorConfig(), np.random.default_rng(42))
    assert np.array_equal(a["gyro"], b["gyro"]) and np.array_equal(a["accel"], b["accel"])
    assert not np.array_equal(a["gyro"], s["gyro"])


def test_gnss_rate_and_latency():
    g = Gnss(SensorConfig(), np.random.default_rng(0))
    seen = []
    for k in range(200):
        t = k * 0.002
        seen.append(g.update(t, [t, 0, 0], [0, 0, 0])[0][0])
    seen = np.array(seen)
    assert seen[30] == 0.0  # first fix is the fallback until a sample has aged 50 ms
    assert seen[26] == 0.0 and seen[-1] == pytest.approx(0.3, abs=1e-9)


def test_wind():
    assert np.array_equal(wind_field(3.0, WindConfig()), np.zeros(3))
    w = WindConfig.preset("constant_6_7_from_-70")
    assert (w.speed, w.from_deg) == (6.7, -70.0)
    assert np.allclose(wind_from(5.0, 0.0), [-5.0, 0.0, 0.0])  # from North blows South
    with pytest.raises(KeyError):
        WindConfig.preset("hurricane")
    t = np.linspace(0.0, 10.0, 200001)
    g = gust_profile(t, 5.0, 2.0, 3.0)
    assert g.max() == pytest.approx(5.0, rel=1e-9)
    # [DERIVED] integral of (P/2)(1 - cos(2 pi tau)) over the window is P L / 2
    assert np.trapezoid(g, t) == pytest.approx(5.0 * 3.0 / 2.0, rel=1e-6)
