"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Prints per-kernel timings and checks that both backends agree bit for bit.
"""
import argparse
import timeit

import numpy as np

from fracspace._kernels import _pykernels

try:
    from fracspace._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    x = np.abs(rng.standard_normal(1 << 16))
    k = np.linspace(0.0, 400.0, 4096)
    r, w = np.polynomial.legendre.leggauss(256)
    r = 0.5 * (r + 1)
    w = 0.5 * w
    return {
        "pairwise_sum[65536]": lambda m: m.pairwise_sum(x),
        "power_sum[65536, p=2]": lambda m: m.power_sum(x, 2.0),
        "power_sum[65536, p=3.7]": lambda m: m.power_sum(x, 3.7),
        "radial_transform[4096x256, N=1]": lambda m: m.radial_transform(k, r, w, 1),
        "radial_transform[4096x256, N=2]": lambda m: m.radial_transform(k, r, w, 2),
        "radial_transform[4096x256, N=3]": lambda m: m.radial_transform(k, r, w, 3),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}  identical")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {tp:10.3f} {tc:10.3f} {tp / tc:8.1f}  {same(fn(_pykernels), fn(_ckernels))}")


if __name__ == "__main__":
    main()
