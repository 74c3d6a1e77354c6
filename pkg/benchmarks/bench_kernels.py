"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20] [--json out.json]

Reports the median wall time per call for each kernel and problem size,
plus the max absolute difference between the two backends.
"""
import argparse
import json
import sys
import timeit

import numpy as np
from scipy.linalg import cholesky

from pckhdmr import _kernels_py

try:
    from pckhdmr import _kernels
except ImportError:
    _kernels = None


def _problem(n, d, m, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = np.sin(3 * X).sum(axis=1)
    F = np.column_stack([np.ones(n), X])
    theta = np.full(d, 5.0)
    C = rng.random((m, d))
    R = _kernels_py.gauss_corr(X, X, theta) + 1e-8 * np.eye(n)
    L = cholesky(R, lower=True)
    return X, y, F, theta, C, L


def _cases(n, d, m):
    X, y, F, theta, C, L = _problem(n, d, m)
    return {
        "gauss_corr": lambda k: k.gauss_corr(X, C, theta),
        "concentrated_loglik": lambda k: k.concentrated_loglik(X, y, F, theta, 1e-8)[0],
        "entropy_scores": lambda k: k.entropy_scores(L, X, C, theta),
    }


def _median_time(fn, repeat):
    fn()
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return float(np.median(times))


def run(sizes, repeat):
    rows = []
    for n, d, m in sizes:
        for name, call in _cases(n, d, m).items():
            row = {"kernel": name, "n": n, "d": d, "m": m,
                   "python_s": _median_time(lambda: call(_kernels_py), repeat)}
            if _kernels is not None:
                row["cython_s"] = _median_time(lambda: call(_kernels), repeat)
                row["speedup"] = row["python_s"] / row["cython_s"]
                diff = np.abs(np.asarray(call(_kernels)) - np.asarray(call(_kernels_py)))
                row["max_abs_diff"] = float(np.max(diff))
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--json", help="also write the rows as JSON")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels not built; timing the fallback only", file=sys.stderr)
    sizes = [(10, 1, 50), (30, 2, 200), (100, 2, 500), (300, 16, 500)]
    rows = run(sizes, args.repeat)
    hdr = f"{'kernel':<22}{'n':>5}{'d':>4}{'m':>5}{'python ms':>12}{'cython ms':>12}{'speedup':>9}{'max diff':>11}"
    print(hdr)
    for r in rows:
        cy = r.get("cython_s", float("nan")) * 1e3
        print(f"{r['kernel']:<22}{r['n']:>5}{r['d']:>4}{r['m']:>5}{r['python_s'] * 1e3:>12.4f}"
              f"{cy:>12.4f}{r.get('speedup', float('nan')):>9.2f}{r.get('max_abs_diff', float('nan')):>11.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
