"""Compare the numba and numpy Jacobi backends.

    python benchmarks/bench_kernels.py [--sizes 2 3 6] [--batches 1 256 16384] [--repeat 5]

Reports the best-of-``repeat`` wall time per call and the largest eigenvalue
disagreement between backends.  Compilation happens before timing.
"""
import argparse
import time

import numpy as np

from qic import _backend, _kernels
from qic.lambda_system import coherent_info_surface


def random_stack(rng, batch, n):
    x = rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
    return x + np.conj(np.swapaxes(x, 1, 2))


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 6])
    ap.add_argument("--batches", type=int, nargs="+", default=[1, 256, 16384])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--surface", type=int, default=128, help="side of the Lambda surface grid")
    args = ap.parse_args(argv)

    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    _backend.configure_threads()
    rng = np.random.default_rng(0)
    _kernels.jacobi_eigh(random_stack(rng, 2, 2), backend="numba")  # compile or load cache

    print(f"{'n':>3} {'batch':>7} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |dw|':>9}")
    for n in args.sizes:
        for batch in args.batches:
            a = random_stack(rng, batch, n)
            w_np = _kernels.jacobi_eigh(a, backend="numpy")[0]
            w_nb = _kernels.jacobi_eigh(a, backend="numba")[0]
            dw = float(np.abs(np.sort(w_np, axis=1) - np.sort(w_nb, axis=1)).max())
            t_np = best_time(lambda: _kernels.jacobi_eigh(a, backend="numpy"), args.repeat)
            t_nb = best_time(lambda: _kernels.jacobi_eigh(a, backend="numba"), args.repeat)
            print(f"{n:>3} {batch:>7} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} {t_np / t_nb:>8.1f} {dw:>9.1e}")

    side = args.surface
    gt = np.linspace(0, 8, side)
    th = np.linspace(0, 2 * np.pi, side)
    print(f"\nLambda surface {side}x{side}:")
    for backend in ("numpy", "numba"):
        t = best_time(lambda: coherent_info_surface(gt, th, backend=backend), max(1, args.repeat // 2))
        print(f"  {backend:<6} {1e3 * t:9.1f} ms")


if __name__ == "__main__":
    main()
