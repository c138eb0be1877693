"""Compare the compiled and pure-Python coordinate-descent kernels.

Times a LASSO path and single fits on Gaussian designs for every available
backend and checks that the backends agree::

    python benchmarks/bench_cd.py --sizes 100x200,200x1000 --repeat 3
"""

import argparse
import time

import numpy as np

from rcvar import _kernels
from rcvar.core import Dataset, derive_rng
from rcvar.selectors import lambda_max, lasso_fit, lasso_path


def problem(n, p, seed=0):
    g = derive_rng(seed, n, p)
    X = g.standard_normal((n, p))
    beta = np.zeros(p)
    beta[: min(5, p)] = 1.0
    return Dataset(X, X @ beta + g.standard_normal(n))


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100x200,200x1000,400x2000", help="comma-separated n x p")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = sorted(_kernels.KERNELS)
    print(f"backends: {', '.join(backends)} (default {_kernels.BACKEND})")
    print(f"{'n':>5} {'p':>6} {'task':>6} " + " ".join(f"{b:>10}" for b in backends) + "   speedup  max|diff|")
    for spec in args.sizes.split(","):
        n, p = (int(v) for v in spec.lower().split("x"))
        data = problem(n, p)
        lam = 0.1 * lambda_max(data)
        tasks = {
            "fit": lambda: lasso_fit(data, lam).coefficients,
            "path": lambda: lasso_path(data, max_support=n // 2).fits[-1].coefficients,
        }
        for task, fn in tasks.items():
            times, coefs = {}, {}
            for b in backends:
                _kernels.cd_weighted_lasso = _kernels.KERNELS[b]
                times[b], coefs[b] = best_time(fn, args.repeat)
            _kernels.cd_weighted_lasso = _kernels.KERNELS[_kernels.BACKEND]
            speed = times["python"] / times["cython"] if len(backends) == 2 else float("nan")
            diff = float(np.max(np.abs(coefs[backends[0]] - coefs[backends[-1]])))
            row = " ".join(f"{times[b]:>9.4f}s" for b in backends)
            print(f"{n:>5} {p:>6} {task:>6} {row} {speed:>8.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
