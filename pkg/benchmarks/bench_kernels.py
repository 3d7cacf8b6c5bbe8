"""Compare the numba and pure-numpy backends of the hot kernels.

Usage: python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Each kernel is run once per backend to warm up (numba compiles on first
call), then timed ``repeat`` times; the best time is reported. Outputs of
the two backends are compared as a sanity check.
"""
import argparse
import time

import numpy as np

from gwed import _kernels
from gwed._accel import HAVE_NUMBA
from gwed.core import mixture

PARAMS = (0.7, 0.9, 0.8, -0.8)


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    mix = mixture(PARAMS)
    w, r = np.asarray(mix.weights), np.asarray(mix.rates)
    x = rng.exponential(1.5, n)
    u = rng.uniform(0.0, 1.0, n)
    v = rng.uniform(0.0, 1.0, n)
    small = max(n // 10, 1)
    return {
        "cdf_sf": lambda b: _kernels.mixture_cdf_sf(x, w, r, backend=b),
        "quantile": lambda b: _kernels.mixture_quantile(u[:small], w, r, backend=b),
        "fgm_conditional": lambda b: _kernels.fgm_conditional(u, v, PARAMS[3], backend=b),
        "loglik_sums": lambda b: _kernels.loglik_sums(x, PARAMS[0], PARAMS[1] * PARAMS[2], PARAMS[3], backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not installed; timing the numpy backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + ("     speedup  max|diff|" if HAVE_NUMBA else ""))
    for name, fn in cases(args.n, rng).items():
        t = {b: _best(lambda: fn(b), args.repeat) for b in backends}
        line = f"{name:<18}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
        if HAVE_NUMBA:
            a = np.atleast_1d(np.concatenate([np.ravel(z) for z in np.atleast_1d(fn("numpy"))]))
            c = np.atleast_1d(np.concatenate([np.ravel(z) for z in np.atleast_1d(fn("numba"))]))
            line += f"{t['numpy'] / t['numba']:>11.1f}x  {np.max(np.abs(a - c)):.1e}"
        print(line)


if __name__ == "__main__":
    main()
