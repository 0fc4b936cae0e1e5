"""Compare the numba and numpy gram-norm kernels.

    python benchmarks/bench_kernels.py [--samples 2000] [--repeats 5]

Prints one row per (k, d) size with the best-of-N wall time of each backend
and the max abs difference between them.
"""

import argparse
import time

import numpy as np

from opframes import _kernels


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--mats", type=int, default=3, help="matrices evaluated per sample")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels.numba is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)

    # warm the jit cache so compile time stays out of the numbers
    _kernels.gram_norms_jit(np.ones((1, 1, 1), complex), np.ones((1, 1, 1), complex))

    print(f"{'k':>2} {'d':>3} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max diff':>10}")
    for k, d in [(1, 4), (2, 4), (2, 8), (3, 6), (3, 12)]:
        xs = rng.standard_normal((args.samples, k, d)) + 1j * rng.standard_normal((args.samples, k, d))
        g = rng.standard_normal((args.mats, d, d)) + 1j * rng.standard_normal((args.mats, d, d))
        mats = g @ np.conj(np.swapaxes(g, 1, 2))
        t_np = best_of(lambda: _kernels.gram_norms_numpy(xs, mats), args.repeats)
        t_nb = best_of(lambda: _kernels.gram_norms_jit(xs, mats), args.repeats)
        diff = np.max(np.abs(_kernels.gram_norms_numpy(xs, mats) - _kernels.gram_norms_jit(xs, mats)))
        print(f"{k:>2} {d:>3} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x {diff:>10.1e}")


if __name__ == "__main__":
    main()
