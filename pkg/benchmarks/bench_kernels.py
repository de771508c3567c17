"""Compare the compiled and NumPy power_series kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``.  Timings are the
best of R runs; the maximum difference between the two backends is reported
alongside.
"""

import argparse
import timeit

import numpy as np

from hypannulus.core import named_space
from hypannulus.kernels import _pykernels
from hypannulus.spherical import gamma_coeffs

try:
    from hypannulus.kernels import _ckernels
except ImportError:
    _ckernels = None

# (largest term count, number of points)
CASES = ((100, 1_000), (200, 10_000), (400, 50_000))
LAMBDAS = np.linspace(0.5, 8.0, 8) + 0.2j


def _inputs(kcap, n):
    x = np.exp(-2 * np.linspace(0.5, 25.0, n))
    # fewer terms where x is small, as in the series evaluation
    kmax = np.clip(np.ceil(-36 / np.log(x)), 8, kcap).astype(np.int64)
    return x, kmax


def _best(func, repeat):
    return min(timeit.repeat(func, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    K = max(k for k, _ in CASES)
    p = named_space("h4c")
    coeffs = np.array([gamma_coeffs(p, lam, K - 1).coeffs for lam in LAMBDAS])
    print(f"{len(LAMBDAS)} frequencies on {p.name}")
    print(f"{'kmax':>6} {'points':>8} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for kcap, n in CASES:
        x, kmax = _inputs(kcap, n)
        py = _best(lambda: _pykernels.power_series(coeffs, x, kmax), args.repeat)
        if _ckernels is None:
            print(f"{kcap:>6} {n:>8} {1e3 * py:>12.3f} {'n/a':>12} {'n/a':>8} {'n/a':>10}")
            continue
        cy = _best(lambda: _ckernels.power_series(coeffs, x, kmax), args.repeat)
        pairs = zip(_pykernels.power_series(coeffs, x, kmax), _ckernels.power_series(coeffs, x, kmax))
        diff = max(float(np.max(np.abs(a - b))) for a, b in pairs)
        print(f"{kcap:>6} {n:>8} {1e3 * py:>12.3f} {1e3 * cy:>12.3f} {py / cy:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
