"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N time of each backend and the
speed-up.  Needs the compiled extension; without it only the fallback runs.
"""
import argparse
import ctypes
import timeit

import numpy as np
from scipy import LowLevelCallable
from scipy.integrate import quad

from qubitpair import _kernels_py as py

try:
    from qubitpair import _kernels as cy
except ImportError:
    cy = None


def pv_quad(mod):
    omega, beta, cutoff = 0.7, 1.0, 20.0
    if mod is py:
        return quad(py.ohmic_pv_integrand, 0.0, 50 * cutoff, args=(omega, beta, cutoff),
                    limit=400)[0]
    params = (ctypes.c_double * 3)(omega, beta, cutoff)
    llc = LowLevelCallable(mod.ohmic_pv_capsule(), ctypes.cast(params, ctypes.c_void_p))
    return quad(llc, 0.0, 50 * cutoff, limit=400)[0]


def cases():
    rng = np.random.default_rng(0)
    P = np.ascontiguousarray((rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))) / 8)
    v = np.ascontiguousarray(rng.normal(size=16) + 0j)
    t = np.arange(30001) * 1.0
    a = np.ascontiguousarray(np.sin(0.5 * t))
    b = np.ascontiguousarray(np.sin(0.5 * t + 0.3) + 0.1 * np.cos(1.3 * t))
    ws = np.linspace(-30, 30, 20000)
    return {
        "ohmic_gamma x20000": lambda m: [m.ohmic_gamma(w, 1.0, 20.0) for w in ws],
        "PV quadrature": pv_quad,
        "propagate_uniform 16x16 x30000": lambda m: m.propagate_uniform(P, v, 30000),
        "sliding_pearson n=30001 w=3142": lambda m: m.sliding_pearson(a, b, 3142, 1e-12),
    }


def best(func, mod, repeat):
    return min(timeit.repeat(lambda: func(mod), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for name, func in cases().items():
        tp = best(func, py, args.repeat)
        if cy is None:
            print(f"{name:34s} {tp:11.4f} {'-':>11s} {'-':>9s}")
            continue
        tc = best(func, cy, args.repeat)
        print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
