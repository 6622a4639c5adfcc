"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--repeats 5]

The script times each hot kernel in the current process (numba path unless
PRUNELAB_NO_NUMBA is set), then re-executes itself in a subprocess with
PRUNELAB_NO_NUMBA=1 to time the fallback, and prints a comparison table.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from prunelab import kernels


def make_workloads(seed=0):
    rng = np.random.default_rng(seed)
    scores = rng.random((4000, 12))
    labels = (rng.random((4000, 12)) < 0.1).astype(np.float64)
    a = rng.random((4000, 12))
    b = rng.random((4000, 12))
    vec = rng.random(20000)
    param = rng.standard_normal(20000)
    grad = rng.standard_normal(20000)
    m = np.zeros(20000)
    v = np.zeros(20000)
    return {
        "fractional_ranks(20k)": lambda: kernels.fractional_ranks(vec),
        "batch_ap(4000x12)": lambda: kernels.batch_ap(scores, labels),
        "auroc_rank(20k)": lambda: kernels.auroc_rank(vec, (vec > 0.9).astype(np.float64)),
        "rowwise_spearman(4000x12)": lambda: kernels.rowwise_spearman(a, b),
        "adam_step(20k)": lambda: kernels.adam_step(
            param, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8
        ),
    }


def time_kernels(repeats):
    results = {}
    for name, fn in make_workloads().items():
        fn()  # warm-up (jit compile on the numba path)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start)
        results[name] = min(times)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--json", action="store_true", help="print raw timings as JSON")
    args = parser.parse_args()

    mine = time_kernels(args.repeats)
    if args.json:
        print(json.dumps(mine))
        return

    label = "numba" if kernels.USE_NUMBA else "numpy"
    if not kernels.USE_NUMBA:
        print("PRUNELAB_NO_NUMBA is set; only the numpy path is available.")
        other = None
    else:
        env = dict(os.environ, PRUNELAB_NO_NUMBA="1")
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--repeats", str(args.repeats), "--json"],
            capture_output=True, text=True, check=True, env=env,
        )
        other = json.loads(out.stdout.strip().splitlines()[-1])

    print(f"{'kernel':<28} {label+' (ms)':>12}", end="")
    if other:
        print(f" {'numpy (ms)':>12} {'speedup':>9}")
    else:
        print()
    for name, t in mine.items():
        row = f"{name:<28} {t * 1e3:>12.3f}"
        if other:
            row += f" {other[name] * 1e3:>12.3f} {other[name] / t:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
