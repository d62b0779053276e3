"""Compiled kernels against their vectorized numpy twins.

    python3 benchmarks/bench_kernels.py --n 200000

Both paths are timed in the same process; the compiled ones are warmed up
first so compile time is reported separately.
"""

import argparse
import time

import numpy as np

from dydw import kernels, npkernels
from dydw._accel import NUMBA_ENABLED, quiet_overflow
from dydw.events import EventSpec, RectangleStack
from dydw.rng import replicate_seeds


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--k", type=int, default=2)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        raise SystemExit("numba is disabled (DYDW_NUMBA=0); nothing to compare")

    seeds = replicate_seeds(1, args.n)
    stack = RectangleStack(args.gamma, args.k)
    cases = {}

    params = EventSpec("C", args.k, stack).params()
    out_b = np.empty(args.n, dtype=np.bool_)
    cases[f"C{args.k} indicator"] = (
        lambda: kernels.eval_event_seeds(seeds, *params, 0.5, out_b),
        lambda: npkernels.eval_event_seeds_np(seeds, *params, 0.5),
    )
    n_steps = stack.d[args.k] ** 2
    out_p = np.empty((args.n, n_steps + 1), dtype=np.int64)
    cases[f"origin path ({n_steps} steps)"] = (
        lambda: kernels.origin_paths_seeds(seeds, n_steps, 0.5, out_p),
        lambda: npkernels.origin_paths_np(seeds, n_steps, 0.5),
    )
    out_a = np.empty(args.n, dtype=np.int64)
    cases["arrow at tau=2"] = (
        lambda: kernels.arrow_at_seeds(seeds, 0, 0, 0, 2.0, out_a),
        lambda: npkernels.arrow_at_np(seeds, 0, 0, 0, 2.0),
    )

    print(f"{'kernel':28s} {'compile s':>10s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    with quiet_overflow():
        for name, (fast, slow) in cases.items():
            t0 = time.perf_counter()
            fast()
            compile_s = time.perf_counter() - t0
            tf = best_of(fast, args.repeat)
            ts = best_of(slow, args.repeat)
            print(f"{name:28s} {compile_s:10.3f} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f}")


if __name__ == "__main__":
    main()
