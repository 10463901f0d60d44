import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from tailsitter_indi._accel import NUMBA_ENABLED, python_impl
from tailsitter_indi.allocation import DEFAULT_WV, k_allocate
from tailsitter_indi.effectiveness import DEFAULT_SCHEDULE, k_build_inner
from tailsitter_indi.sim.plant import DEFAULT_PLANT, hover_command, initial_state, k_plant_step

from oracles import random_inner_problems

pytestmark = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba path disabled")


def test_kernels_are_compiled():
    for k in (k_allocate, k_plant_step, k_build_inner):
        assert hasattr(k, "py_func") and python_impl(k) is k.py_func


def test_allocation_parity():
    rng = np.random.default_rng(9)
    G, dnu, lo, hi = random_inner_problems(rng, 300)
    for i in range(300):
        args = (G[i], dnu[i], lo[i], hi[i], DEFAULT_WV, np.ones(4), 1e-4, 9600.0, 16)
        a = k_allocate(*args)
        b = python_impl(k_allocate)(*args)
        assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-9)
        assert np.array_equal(a[1], b[1]) and a[2] == b[2] and a[3] == b[3]


def test_inner_matrix_parity():
    out_a, out_b = np.empty((4, 4)), np.empty((4, 4))
    for theta, V, valid in ((0.0, 0.0, False), (-1.2, 15.0, True), (-0.7, 4.0, True)):
        u = np.array([8000.0, -8000.0, 3000.0, 5000.0])
        k_build_inner(theta, V, valid, u, DEFAULT_SCHEDULE, out_a)
        python_impl(k_build_inner)(theta, V, valid, u, DEFAULT_SCHEDULE, out_b)
        assert np.array_equal(out_a, out_b)


def test_plant_parity():
    uh = hover_command()
    xa = initial_state(vel=(1.0, -0.5, -3.0), omega=(0.2, -0.1, 0.05), u=(0, 0, uh, uh))
    xb = xa.copy()
    u_c = np.array([1500.0, -900.0, uh + 300, uh - 200])
    w = np.array([1.0, 2.0, 0.0])
    for _ in range(500):
        k_plant_step(xa, u_c, w, DEFAULT_PLANT)
        python_impl(k_plant_step)(xb, u_c, w, DEFAULT_PLANT)
    assert np.allclose(xa, xb, rtol=1e-10, atol=1e-10)


def test_pure_python_path_matches_compiled_run(tmp_path):
    script = textwrap.dedent("""
        import sys, numpy as np
        from tailsitter_indi._accel import NUMBA_ENABLED
        from tailsitter_indi.scenario import run_scenario
        r = run_scenario("hover", duration=1.0, plots=False)
        np.save(sys.argv[1], r.result.log)
        print(NUMBA_ENABLED)
    """)
    logs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, TAILSITTER_INDI_NUMBA=flag)
        out = tmp_path / f"log{flag}.npy"
        r = subprocess.run([sys.executable, "-c", script, str(out)], env=env, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        assert r.stdout.strip() == ("False" if flag == "0" else "True")
        logs[flag] = np.load(out)
    assert np.allclose(logs["0"], logs["1"], rtol=1e-9, atol=1e-9, equal_nan=True)
