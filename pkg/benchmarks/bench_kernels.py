"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N time for each backend and the
speedup, and checks that the two backends agree on every workload.
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from aeconv.kernels import get_backend


def workloads(rng):
    mags = np.abs(rng.standard_normal((512, 10_000)))
    w = np.full(10_000, 1e-4)
    p_grid = np.geomspace(1 + 2 ** -10, 64, 32)
    small = np.ascontiguousarray(mags[:64, :2000])
    nodes = np.sort(rng.uniform(0, 2 * math.pi, 1032))
    gw = rng.standard_normal(1032) / 1032
    x = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
    xs = np.linspace(-20, 20, 200_000)
    return {
        "window_moments arctan 512x10000": lambda k: k.window_moments(mags, w, 0, 1.0),
        "window_moments power:2 512x10000": lambda k: k.window_moments(mags, w, 3, 2.0),
        "running_lp_norms 64x2000x32": lambda k: k.running_lp_norms(small, w[:2000], p_grid),
        "dirichlet n=128, 2e5 points": lambda k: k.dirichlet(128, xs),
        "convolve_dirichlet n=128 4096x1032": lambda k: k.convolve_dirichlet(128, x, nodes, gw),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; only the numpy fallback is available")
        cy = None
    rng = np.random.default_rng(0)
    print(f"{'kernel':<38s} {'python':>10s} {'cython':>10s} {'speedup':>8s}  agree")
    for name, fn in workloads(rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        if cy is None:
            print(f"{name:<38s} {t_py * 1e3:9.1f}ms")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        a, b = fn(py), fn(cy)
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        agree = all(np.allclose(u, v, rtol=1e-11, atol=1e-12) for u, v in zip(a, b))
        print(f"{name:<38s} {t_py * 1e3:9.1f}ms {t_cy * 1e3:9.1f}ms {t_py / t_cy:7.2f}x  {agree}")


if __name__ == "__main__":
    main()
