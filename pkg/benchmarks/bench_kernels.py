"""Compare the numba kernels with their pure-Python implementations.

    python3 benchmarks/bench_kernels.py [--repeat N] [--sim-seconds S]

Kernel timings call the compiled dispatcher and its ``.py_func`` in the same
process. The closed-loop timing runs a hover scenario in two subprocesses,
one with TAILSITTER_INDI_NUMBA=0, so no compiled code is involved at all.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tailsitter_indi._accel import NUMBA_ENABLED, python_impl
from tailsitter_indi.allocation import DEFAULT_WV, k_allocate
from tailsitter_indi.effectiveness import build_inner_G
from tailsitter_indi.sim.plant import DEFAULT_PLANT, hover_command, initial_state, k_plant_step


def best_of(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def allocation_case(kernel, n=2000):
    rng = np.random.default_rng(0)
    G = build_inner_G(-0.6, 8.0, (2000.0, -1500.0, 5000.0, 5200.0), True)
    dnu = rng.normal(0.0, 20.0, (n, 4))
    lo, hi = np.full(4, -3000.0), np.full(4, 3000.0)
    lo[2:], hi[2:] = -2000.0, 2000.0
    Wu = np.ones(4)

    def run():
        for k in range(n):
            kernel(G, dnu[k], lo, hi, DEFAULT_WV, Wu, 1e-4, 9600.0, 16)
    return run, n


def plant_case(kernel, n=2000):
    uh = hover_command()
    u_c = np.array([500.0, -500.0, uh, uh])
    wind = np.zeros(3)

    def run():
        x = initial_state(u=(0.0, 0.0, uh, uh))
        for _ in range(n):
            kernel(x, u_c, wind, DEFAULT_PLANT)
    return run, n


def closed_loop(flag, seconds):
    code = ("import time; from tailsitter_indi.scenario import run_scenario;"
            "run_scenario('hover', duration=0.1, plots=False); t0 = time.perf_counter();"
            f"run_scenario('hover', duration={seconds}, plots=False); print(time.perf_counter() - t0)")
    env = dict(os.environ, TAILSITTER_INDI_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sim-seconds", type=float, default=10.0)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        sys.exit("numba is disabled in this process; unset TAILSITTER_INDI_NUMBA")

    print(f"{'case':<28}{'numba':>12}{'python':>12}{'speed-up':>10}")
    for name, case, kernel in (("wls allocation / call", allocation_case, k_allocate),
                               ("plant step / tick", plant_case, k_plant_step)):
        fast, n = case(kernel)
        slow, _ = case(python_impl(kernel))
        tf, ts = best_of(fast, args.repeat) / n, best_of(slow, args.repeat) / n
        print(f"{name:<28}{tf * 1e6:>10.2f}us{ts * 1e6:>10.2f}us{ts / tf:>9.1f}x")
    tf, ts = closed_loop("1", args.sim_seconds), closed_loop("0", args.sim_seconds)
    print(f"{f'closed loop {args.sim_seconds:g} s hover':<28}{tf:>11.2f}s{ts:>11.2f}s{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
