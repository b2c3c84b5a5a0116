"""Taylor flow in the double-precision lane: numba kernels vs the numpy fallback.

    python benchmarks/bench_taylor.py [--span 100] [--repeat 3]

The lane is picked per call from GSHE_NUMBA, so both are timed in one process.
"""

import argparse
import os
import time

import numpy as np

from gshe.model import ModelParams
from gshe.mpnum import Precision
from gshe.taylor import flow


def run(span, with_tangent, p):
    x0 = np.array([1e-6, 0.0, 0.0, -2e-7])  # near the saddle-focus, stays small
    v0 = np.eye(4) if with_tangent else None
    return flow(x0, v0, span, p)


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--span", type=float, default=100.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    p = ModelParams.create(2.0, -0.05, Precision(16, guard_bits=0))
    old = os.environ.get("GSHE_NUMBA")
    try:
        for tangent in (False, True):
            os.environ["GSHE_NUMBA"] = "1"
            run(1.0, tangent, p)  # compile
            t_nb, r_nb = best_of(lambda: run(args.span, tangent, p), args.repeat)
            os.environ["GSHE_NUMBA"] = "0"
            t_np, r_np = best_of(lambda: run(args.span, tangent, p), args.repeat)
            diff = float(np.max(np.abs(r_nb.x_end - r_np.x_end)))
            label = "state+tangent" if tangent else "state"
            print(f"{label:14s} steps={r_nb.steps:5d}  numba {t_nb * 1e3:8.2f} ms  "
                  f"numpy {t_np * 1e3:8.2f} ms  speedup {t_np / t_nb:6.1f}x  |dx|={diff:.1e}")
    finally:
        if old is None:
            os.environ.pop("GSHE_NUMBA", None)
        else:
            os.environ["GSHE_NUMBA"] = old


if __name__ == "__main__":
    main()
