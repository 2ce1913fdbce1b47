"""Compare the compiled and pure-Python integration kernels.

Usage: python3 benchmarks/bench_kernels.py [--t-end SECONDS] [--repeat N]
"""

import argparse
import time

import numpy as np

from ppassive.circuits import (OddPower, OpAmpParams, build_bistable,
                               build_ladder_oscillator)
from ppassive.kernels import BACKENDS
from ppassive.sim import integrate


def circuits():
    phi = OddPower(5, 12.0)
    osc = build_ladder_oscillator(3.3e3, 200e-6, OpAmpParams(1e6, 15.9e-9, 0.1, phi))
    yield "ladder_oscillator", osc, [0.1, 0, 0, 0]
    bi = build_bistable(3.3e3, 1e3, 100e-6, OpAmpParams(1e6, 15.9e-9, 1.0, phi))
    yield "bistable", bi, [30.0, -4.0]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"backends: {sorted(BACKENDS)}  t_end={args.t_end} dt={args.dt}")
    print(f"{'circuit':<18}{'method':<12}{'backend':<10}{'steps/s':>12}{'speedup':>10}{'max diff':>12}")
    for name, cl, y0 in circuits():
        for method in ("rosenbrock", "rk4"):
            dt = args.dt if method == "rosenbrock" else 1e-8
            t_end = args.t_end if method == "rosenbrock" else 1e-4
            steps = round(t_end / dt)
            res = {}
            for backend in ("python", "compiled"):
                if backend not in BACKENDS:
                    continue
                secs, tr = best_of(lambda: integrate(cl, y0, t_end, dt, method=method,
                                                     backend=backend), args.repeat)
                res[backend] = (secs, tr.states)
            base = res["python"][0]
            for backend, (secs, states) in res.items():
                diff = np.max(np.abs(states - res["python"][1]))
                print(f"{name:<18}{method:<12}{backend:<10}{steps / secs:>12.0f}"
                      f"{base / secs:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
