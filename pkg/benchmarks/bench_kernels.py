"""Compare the compiled kernel core against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 200 800 1600] [--dim 128] [--repeat 3]

Prints best-of-``repeat`` wall time per call and the max abs difference
between the two backends.
"""
import argparse
import timeit

import numpy as np

from mida import _fallback
from mida.kernels import KernelSpec

try:
    from mida import _core
except ImportError:  # extension not built
    _core = None

SPECS = [KernelSpec("linear"), KernelSpec("polynomial", 2, 1.0), KernelSpec("rbf", sigma=5.0)]


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 800, 1600])
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled core not available; rebuild with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'op':<22}{'n':>6}{'cython s':>12}{'numpy s':>12}{'ratio':>8}{'max diff':>11}")
    for n in args.sizes:
        S = np.ascontiguousarray(rng.normal(size=(n, args.dim)))
        T = np.ascontiguousarray(rng.normal(size=(n // 2, args.dim)))
        for spec in SPECS:
            a = (spec.code, spec.degree, spec.sigma)
            for op, f_c, f_p in (
                ("gram", lambda: _core.gram(S, *a), lambda: _fallback.gram(S, *a)),
                ("cross_gram", lambda: _core.cross_gram(S, T, *a), lambda: _fallback.cross_gram(S, T, *a)),
            ):
                tc, tp = best(f_c, args.repeat), best(f_p, args.repeat)
                diff = np.abs(f_c() - f_p()).max()
                print(f"{op + '/' + spec.family:<22}{n:>6}{tc:>12.4f}{tp:>12.4f}{tp / tc:>8.2f}{diff:>11.1e}")
        K = _fallback.gram(S, 2, 1, 5.0)
        L = _fallback.gram(S[:, :3], 0, 1, 1.0)
        tc = best(lambda: _core.centered_trace(K, L), args.repeat)
        tp = best(lambda: _fallback.centered_trace(K, L), args.repeat)
        diff = abs(_core.centered_trace(K, L) - _fallback.centered_trace(K, L))
        print(f"{'centered_trace':<22}{n:>6}{tc:>12.4f}{tp:>12.4f}{tp / tc:>8.2f}{diff:>11.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
