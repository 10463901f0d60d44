"""Acceptance criteria 1-9, one pass/fail line each (also listed in the terminal summary)."""

import filecmp
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import default_weights, enumerate_box_qp, random_inner_problems, run_mock_inner, stacked_system
from tailsitter_indi import effectiveness as eff
from tailsitter_indi.allocation import AllocationProblem, check_kkt, wls_allocate
from tailsitter_indi.attitude import thrust_floor
from tailsitter_indi.guidance import DIRECT, FIXED_WING_TURN, line_lambda, select_turn_mode
from tailsitter_indi.identification import (
    fit_airspeed_law, fit_effectiveness, fit_flap_lift, fit_sideslip, synthetic_effectiveness_log,
    synthetic_flap_log, synthetic_sideslip_log,
)
from tailsitter_indi.io import result_columns
from tailsitter_indi.scenario import run_scenario
from tailsitter_indi.sim.sensors import SensorConfig

D = math.radians


def report(n: int, ok: bool, detail: str, t0: float) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - t0:.1f} s) {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    run_scenario("hover", duration=0.1, plots=False)


def cols(name, **kw):
    return result_columns(run_scenario(name, plots=False, **kw).result)


def test_criterion_1_schedule_point_checks():
    t0 = time.perf_counter()
    m = 1.2
    checks = [
        (eff.flap_pitch_eff(0.0, 0.0, False), -2.1e-3),
        (eff.flap_pitch_eff(D(-90), 0.0, False), -4.0e-3),
        (eff.flap_pitch_eff(D(-60), 10.0, True), -5.5e-3),
        (eff.flap_yaw_eff(0.0, 0.0, False), -2.0e-3),
        (eff.flap_yaw_eff(D(-90), 0.0, False), -8.0e-3),
        (eff.flap_yaw_eff(D(-60), 10.0, True), -10.8e-3),
        (eff.build_inner_G(0.0, 0.0, (0, 0, 5000, 5000), False)[3, 2], -0.0011),
        (eff.thrust_pitch_eff(7000.0 + 1e-9, -7000.0 - 1e-9), -2.2),
        (eff.thrust_pitch_eff(-7000.0 - 1e-9, 7000.0 + 1e-9), 2.2),
        (eff.thrust_pitch_eff(7000.0, -7000.0), 0.0),
        (thrust_floor(0.0), 0.42 * 9600),
        (thrust_floor(12.0), 0.16 * 9600),
        (eff.lift_slope(D(-20), 0.0, m, V_valid=False), 0.0),
        (eff.lift_slope(D(-90), 0.0, m, V_valid=False), -24.0 * m),
        (eff.lift_slope(D(-80), 20.0, m), -79.12 * m),
    ]
    worst = max(abs(a - b) for a, b in checks)
    report(1, worst <= 1e-12, f"{len(checks)} closed-form values, worst |error| {worst:.1e} (tol 1e-12)", t0)


def test_criterion_2_allocation_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    N = 10000
    G, dnu, lo, hi = random_inner_problems(rng, N)
    A, b = stacked_system(G, dnu, default_weights(N), 1e-4, 9600.0)
    f_or, _ = enumerate_box_qp(A, b, lo, hi)
    worst_gap, worst_kkt, n_conv = -math.inf, 0.0, 0
    for k in range(N):
        p = AllocationProblem(G[k], dnu[k], lo[k], hi[k])
        s = wls_allocate(p)
        worst_gap = max(worst_gap, p.objective(s.du) - f_or[k])
        if s.converged:
            n_conv += 1
            r = check_kkt(p, s)
            worst_kkt = max(worst_kkt, r.stationarity, r.sign_violation, r.bound_violation)
    wins = 0
    for _ in range(100):
        theta = rng.uniform(-math.pi / 2, 0.0)
        Gi = eff.build_inner_G(theta, 0.0, (0.0, 0.0, 5000.0, 5000.0), False)
        lim = rng.uniform(500.0, 3000.0)
        d = np.array([0.0, rng.choice([-1, 1]) * rng.uniform(1.5, 3.0) * lim * 2 * abs(Gi[1, 0]),
                      rng.choice([-1, 1]) * rng.uniform(1.5, 3.0) * lim * 2 * abs(Gi[2, 0]), 0.0])
        s = wls_allocate(AllocationProblem(Gi, d, [-lim, -lim, 0, 0], [lim, lim, 0, 0]))
        e = np.abs(s.achieved - d) / np.abs(d + (d == 0))
        wins += e[1] < e[2]
    ok = worst_gap <= 1e-6 and worst_kkt < 1e-8 and wins == 100
    report(2, ok, f"max objective - oracle {worst_gap:.2e} (tol 1e-6), max KKT residual {worst_kkt:.1e} on "
                  f"{n_conv}/{N} converged (tol 1e-8), pitch priority {wins}/100", t0)


def test_criterion_3_indi_fixed_point_and_robustness():
    t0 = time.perf_counter()
    t, e = run_mock_inner(k=1.0, T=3.0)
    a = np.linalg.norm(e, axis=1)
    s = [a[int(x * 500)] for x in (0.5, 1.0, 1.5, 2.0, 2.5)]
    ratios = [q / p for p, q in zip(s, s[1:])]
    geometric = max(ratios) < 0.5
    stable = {}
    for k in (0.5, 2.0):
        tk, ek = run_mock_inner(k=k, moment=(1.0, 1.0, -1.0), T=8.0)
        ak = np.linalg.norm(ek, axis=1)
        stable[k] = float(ak[tk >= 6.0].max() / ak[0])
    td, ed = run_mock_inner(k=1.0, moment=(2.0, -3.0, 1.0), T=3.0)
    dist = float(np.max(np.abs(ed[td >= 2.0])))
    ok = geometric and all(v < 1e-3 for v in stable.values()) and dist < 1e-3
    report(3, ok, f"decay ratio per 0.5 s <= {max(ratios):.3f}; late/initial error k=0.5 {stable[0.5]:.1e}, "
                  f"k=2 {stable[2.0]:.1e}; max |e| after 2 s with moment {dist:.1e} rad/s (tol 1e-3)", t0)


def _osc(c, t_from=4.0):
    m = c["t"] >= t_from
    return float(np.ptp(np.degrees(c["theta"][m])))


def test_criterion_4_non_minimum_phase_remediation():
    t0 = time.perf_counter()
    off, on, scaled = cols("nmp_off"), cols("nmp_on"), cols("nmp_scaled")
    t = off["t"]
    step = t[np.argmax(off["acc_ref_n"] > 1.0)]
    w = (t >= step) & (t < step + 0.3)
    a = off["acc_f_n"][w]
    first_neg = int(np.argmax(a < -0.2)) if np.any(a < -0.2) else len(a)
    first_pos = int(np.argmax(a > 0.2)) if np.any(a > 0.2) else len(a)
    inverse = bool(a.min() < -0.5 and first_neg < first_pos)
    last = off["t"] >= off["t"][-1] - 2.0
    sustained = float(np.ptp(np.degrees(off["theta"][last]))) > 5.0
    o_off, o_on, o_sc = _osc(off), _osc(on), _osc(scaled)
    ok = inverse and sustained and o_on <= 0.5 * o_off and o_sc <= 0.5 * o_off
    report(4, ok, f"inverse response {a.min():+.2f} m/s^2 against +{off['acc_ref_n'][w].max():.2f} demand; "
                  f"pitch p-p after 4 s: off {o_off:.1f} deg, compensator {o_on:.2f} deg "
                  f"({o_on / o_off:.1%}), 2x scaling {o_sc:.2f} deg ({o_sc / o_off:.1%}); bound 50%", t0)


def _turn_excursion(c):
    m = (c["element"] >= 2) & (c["element"] <= 3)
    return float(np.max(np.abs(c["pos_d"][m] + 40.0)))


def test_criterion_5_turn_gain_comparison():
    t0 = time.perf_counter()
    eq, uneq = _turn_excursion(cols("turn_equal")), _turn_excursion(cols("turn_unequal"))
    report(5, eq < uneq and eq < 5.0,
           f"peak altitude excursion through the reversals: 7.6/7.6 {eq:.2f} m, 13.3/7.6 {uneq:.2f} m (bound 5 m)",
           t0)


def test_criterion_6_full_transition():
    t0 = time.perf_counter()
    out = run_scenario("transition", plots=False)
    c = result_columns(out.result)
    s = out.summary
    state = ("pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d", "phi", "theta", "psi", "u_c0", "u_c1", "u_c2", "u_c3")
    finite = all(bool(np.all(np.isfinite(c[k]))) for k in state)
    cruise = s.max_airspeed >= 15.0
    back = float(np.hypot(c["vel_n"][-1], c["vel_e"][-1])) < 1.0
    ok = (finite and cruise and back and s.pitch_rms_deg < 5.0 and s.theta_min_deg >= -90.0
          and s.theta_max_deg <= 25.0)
    report(6, ok, f"pitch RMS {s.pitch_rms_deg:.2f} deg (tol 5), theta [{s.theta_min_deg:.1f}, "
                  f"{s.theta_max_deg:.1f}] deg, max airspeed {s.max_airspeed:.1f} m/s, final ground speed "
                  f"{np.hypot(c['vel_n'][-1], c['vel_e'][-1]):.2f} m/s, wind 5 m/s", t0)


def _overshoot(c, target_n=300.0):
    return float(max(0.0, np.max(c["pos_n"]) - target_n))


def test_criterion_7_guidance():
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 30.0, 301)
    table = all(select_turn_mode(a, b) == (FIXED_WING_TURN if (a > 10 and b > 14) else DIRECT)
                for a in grid for b in grid)
    lam = abs(line_lambda(0.0)) <= 1e-12 and abs(line_lambda(50.0) - math.atan(3.5)) <= 1e-12
    lam = lam and abs(round(line_lambda(50.0), 4) - 1.2925) < 1e-12
    poly = run_scenario("polygon", plots=False).summary
    steady = max(p["cross_track_steady_max"] for p in poly.phases if "cross_track_steady_max" in p)
    lim, nolim = _overshoot(cols("tailwind_limit")), _overshoot(cols("tailwind_nolimit"))
    ok = table and lam and steady < 5.0 and lim < 5.0 and nolim > lim
    report(7, ok, f"truth table {'exact' if table else 'WRONG'}; lambda(50) {line_lambda(50.0):.4f} rad; polygon "
                  f"steady cross-track max {steady:.2f} m (tol 5); tailwind overshoot {lim:.2f} m limited, "
                  f"{nolim:.2f} m unlimited", t0)


def test_criterion_8_identification():
    t0 = time.perf_counter()
    gyro, acc = SensorConfig().gyro_sigma, SensorConfig().accel_sigma
    a, b = -2.4e-3, -3.1e-5
    Vs = np.array([8.0, 11.0, 14.0, 17.0, 20.0])

    def law(sigma):
        est = [fit_effectiveness(*synthetic_effectiveness_log(a + b * V * V, seed=i, gyro_sigma=sigma),
                                 combine=(1, -1)).value[0] for i, V in enumerate(Vs)]
        return est, fit_airspeed_law(est, Vs)

    est0, (a0, b0) = law(0.0)
    estn, (an, bn) = law(gyro)
    g_true = a + b * Vs * Vs
    e_g0 = float(np.max(np.abs(np.array(est0) / g_true - 1)))
    e_law0 = max(abs(a0 / a - 1), abs(b0 / b - 1))
    e_gn = float(np.max(np.abs(np.array(estn) / g_true - 1)))
    e_lawn = max(abs(an / a - 1), abs(bn / b - 1))

    s0 = fit_sideslip(*synthetic_sideslip_log(0.05, 0.01))
    sn = fit_sideslip(*synthetic_sideslip_log(0.05, 0.01, accel_sigma=acc, seed=3))
    e_s0 = max(abs(s0.c2 / 0.05 - 1), abs(s0.b2 / 0.01 - 1))
    e_sn = max(abs(sn.c2 / 0.05 - 1), abs(sn.b2 / 0.01 - 1))

    f0 = fit_flap_lift(*synthetic_flap_log(2e-4))
    fn = fit_flap_lift(*synthetic_flap_log(2e-4, accel_sigma=acc, seed=2))
    e_f0, e_fn = abs(f0.G_flap / 2e-4 - 1), abs(fn.G_flap / 2e-4 - 1)
    resid = fn.with_flaps.train_rms < fn.simple.train_rms and f0.with_flaps.train_rms < f0.simple.train_rms

    exact = max(e_g0, e_law0, e_s0, e_f0)
    ok = exact < 1e-8 and max(e_gn, e_lawn) < 0.05 and e_sn < 0.02 and e_fn < 0.10 and resid
    report(8, ok, f"noiseless worst relative error {exact:.1e}; noisy G21 {e_gn:.2%}, a+bV^2 {e_lawn:.2%} (tol 5%), "
                  f"sideslip {e_sn:.2%} (tol 2%), G_flap {e_fn:.2%} (tol 10%); flap-term fit residual "
                  f"{fn.with_flaps.train_rms:.3f} < {fn.simple.train_rms:.3f}", t0)


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    same = []
    for name, dur in (("transition", 12.0), ("identification_hover", 6.0), ("polygon", 6.0)):
        run_scenario(name, tmp_path / "a" / name, duration=dur, plots=False)
        run_scenario(name, tmp_path / "b" / name, duration=dur, plots=False)
        same.append(filecmp.cmp(tmp_path / "a" / name / "log.csv", tmp_path / "b" / name / "log.csv",
                                shallow=False))
    other = cols("transition", duration=12.0, seed=99)
    base = cols("transition", duration=12.0)
    differs = not np.array_equal(other["theta"], base["theta"])
    report(9, all(same) and differs, f"{sum(same)}/3 scenario pairs byte-identical; a different seed changes the log",
           t0)
