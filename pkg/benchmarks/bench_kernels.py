"""Compare the compiled and pure-Python transfer-matrix kernels.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--points K] [--repeat R]
"""

import argparse
import time

import numpy as np

from cmvlab import _kernels_py
from cmvlab.kernels import MODE_A

try:
    from cmvlab import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10**6)
    ap.add_argument("--points", type=int, default=64, help="spectral parameters for the batched kernel")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    alpha = rng.choice([0.3, -0.3], args.steps).astype(np.complex128)
    z1 = np.array([1.5 + 0.0j])
    # half-cell offset keeps z = +-1 off the grid: with real coefficients the factors commute there and
    # the log norm is so z-sensitive that rounding-order differences show up at the 1e-2 level
    zs = np.exp(2j * np.pi * (np.arange(args.points) + 0.5) / args.points)
    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])

    print(f"steps={args.steps} points={args.points} (best of {args.repeat})")
    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}{'ns/step/z':>12}")
    results = {}
    for label, zarr, fn_name in (("product, one z", z1, "transfer_product"),
                                 ("log norms, one z", z1, "transfer_log_norms"),
                                 (f"log norms, {args.points} z", zs, "transfer_log_norms")):
        for name, mod in backends:
            fn = getattr(mod, fn_name)
            call = (lambda: fn(alpha, complex(zarr[0]), MODE_A)) if fn_name == "transfer_product" else (
                lambda: fn(alpha, zarr, MODE_A))
            sec, out = best_of(call, args.repeat)
            results[(label, name)] = (sec, out)
            print(f"{label:<28}{name:<10}{sec:>10.4f}{1e9 * sec / (args.steps * zarr.size):>12.1f}")
        if len(backends) == 2:
            (sp, op), (sc, oc) = results[(label, "python")], results[(label, "cython")]
            if fn_name == "transfer_product":
                diff = float(np.max(np.abs(op[0] - oc[0]))) + abs(op[1] - oc[1])
            else:
                diff = float(np.max(np.abs(op - oc)))
            print(f"{'':<28}{'speedup':<10}{sp / sc:>10.1f}x   max diff {diff:.2e} ({diff / args.steps:.1e} per step)")
    if _kernels_c is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
