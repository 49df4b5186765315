"""Compare the compiled and pure-Python integration kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Each workload is run on both backends; the script reports the best wall
time of ``N`` repeats, the speed-up, and whether the two backends returned
identical results.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from autoresonance import _kernels_py
from autoresonance.asymptotics import reference_series
from autoresonance.dynamics import ModelParams
from autoresonance.perturbations import Distribution, JumpTrainSpec, sample_jump_train

try:
    from autoresonance import _kernels
except ImportError:  # extension not built
    _kernels = None


def workloads():
    p = ModelParams(1.0, 0.5, 0.2)
    ref = reference_series(p, 1)
    tol = (0, 1e-10, 1e-10, 1e-3, 1.0, 10**7)

    capture = (
        1.59, 0.59, 0.01, 100.0, p.lam, p.delta, p.f,
        0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, [], [], [], [],
        ref.r_coeffs, ref.psi_coeffs, math.inf, 0, *tol, False,
    )

    path = sample_jump_train(JumpTrainSpec(10, Distribution.uniform(-0.5, 0.5), 0.01), 7)
    form = path.structured
    r0, psi0 = ref.eval(5.0)
    seg = form.segments
    jump = (
        r0, psi0, 5.0, 55.0, p.lam, p.delta, p.f,
        1.0, *form.coef, *form.powers, form.base,
        [s[0] for s in seg], [s[1] for s in seg], [s[2] for s in seg], list(path.breakpoints),
        ref.r_coeffs, ref.psi_coeffs, 0.1, 0, *tol, False,
    )

    eps = 0.01
    duffing = (1e-3, 0.0, 0.0, 2000.0, 0.0, 1.5, eps, eps * eps / 8, 0, 1e-10, 1e-10, 1e-3, 0.5, 10**7, False)
    return [
        ("phase: capture run to tau=100", "integrate_phase", capture),
        ("phase: jump train with escape check", "integrate_phase", jump),
        ("duffing: t in [0, 2000]", "integrate_duffing", duffing),
    ]


def best_time(fn, args, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    return all(
        np.array_equal(np.asarray(x), np.asarray(y), equal_nan=True) for x, y in zip(a[:6], b[:6])
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the Python backend can run")
    print(f"{'workload':40s} {'steps':>7s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'identical':>9s}")
    for name, func, wargs in workloads():
        t_py, out_py = best_time(getattr(_kernels_py, func), wargs, args.repeat)
        if _kernels is None:
            print(f"{name:40s} {out_py[5]:7d} {t_py:11.4f} {'-':>11s} {'-':>8s} {'-':>9s}")
            continue
        t_c, out_c = best_time(getattr(_kernels, func), wargs, args.repeat)
        print(
            f"{name:40s} {out_c[5]:7d} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:7.1f}x {str(same(out_py, out_c)):>9s}"
        )


if __name__ == "__main__":
    main()
