"""Time the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time of ``repeat`` calls after one warm-up
call (which also triggers compilation), and the numpy/numba speedup.
"""

import argparse
import timeit

import numpy as np

from holowidth import kernels
from holowidth._accel import NUMBA_ENABLED


def cases(rng):
    N = 400
    a1 = rng.uniform(0.5, 2.0, 400_001)
    ax, ay = rng.uniform(0.5, 2.0, (N + 1, N)), rng.uniform(0.5, 2.0, (N, N + 1))
    W = rng.normal(size=(2000, 500)) * np.arange(1, 501) ** -2.0
    A = rng.normal(size=(2000, 3)) + 1j * rng.normal(size=(2000, 3))
    B = rng.normal(size=(3000, 3)) + 1j * rng.normal(size=(3000, 3))
    exps = rng.integers(0, 5, size=(50000, 8))
    y = rng.uniform(-1, 1, 8)
    return [
        ("stencil_1d (N=400000)", kernels._stencil_1d_nb, kernels._stencil_1d_np, (a1, 400_000, 1.0)),
        ("stencil_2d (N=400)", kernels._stencil_2d_nb, kernels._stencil_2d_np, (ax, ay, N, 1.0)),
        ("strong_greedy (2000x500, n=60)", kernels._strong_greedy_nb, kernels._strong_greedy_np, (W, 60)),
        ("min_sup_distance (2000 vs 3000)", kernels._min_sup_distance_nb, kernels._min_sup_distance_np, (A, B)),
        ("monomials (50000 x 8)", kernels._monomials_nb, kernels._monomials_np, (exps, y)),
    ]


def best_time(fn, args, repeat):
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not NUMBA_ENABLED:
        print("numba is disabled; the *_nb kernels run as plain python and will be slow")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, nb, npf, fargs in cases(rng):
        t_nb = best_time(nb, fargs, args.repeat)
        t_np = best_time(npf, fargs, args.repeat)
        print(f"{name:34s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
