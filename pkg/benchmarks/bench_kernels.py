"""Time the compiled kernels against the NumPy fallback, and apply against apply_fast.

Run with ``python3 benchmarks/bench_kernels.py [--n 16384] [--repeat 5]``.
"""
import argparse
import timeit

import numpy as np

from subcalc import GridFunction, OperatorSpec, apply, apply_fast
from subcalc import _pure
from subcalc.weights import generating_polynomial

try:
    from subcalc import _kernels
except ImportError:
    _kernels = None


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2**14)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    n, rep = args.n, args.repeat

    rng = np.random.default_rng(0)
    spec = OperatorSpec(0.5, 0.5, 5, 1.0 / n)
    u = np.array([float(c) for c in generating_polynomial(5).coeffs])
    g = _pure.lubich_recurrence(u, -0.5, n)
    f = rng.standard_normal(n + 1)
    b = _pure.lower_toeplitz_matvec(g, f)
    solve_n = min(n, 4096)  # the NumPy fallback is a Python loop here

    cases = {
        "lubich_recurrence": lambda mod: mod.lubich_recurrence(u, -0.5, n),
        "lower_toeplitz_matvec": lambda mod: mod.lower_toeplitz_matvec(g, f),
        f"lower_toeplitz_solve (N={solve_n})": lambda mod: mod.lower_toeplitz_solve(
            g, b, np.zeros(solve_n + 1), 0),
    }
    print(f"N = {n}, best of {rep}")
    print(f"{'kernel':34s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, call in cases.items():
        t_py = best(lambda: call(_pure), rep)
        if _kernels is None:
            print(f"{name:34s} {1e3 * t_py:12.3f} {'n/a':>12s} {'':>8s}")
            continue
        t_cy = best(lambda: call(_kernels), rep)
        print(f"{name:34s} {1e3 * t_py:12.3f} {1e3 * t_cy:12.3f} {t_py / t_cy:7.1f}x")

    grid = GridFunction(0.0, spec.h, f)
    t_direct = best(lambda: apply(spec, grid), rep)
    t_fast = best(lambda: apply_fast(spec, grid), rep)
    print(f"{'apply (direct)':34s} {1e3 * t_direct:12.3f} ms")
    print(f"{'apply_fast (FFT)':34s} {1e3 * t_fast:12.3f} ms   {t_direct / t_fast:.1f}x faster")


if __name__ == "__main__":
    main()
