"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--build]

``--build`` also times a full tree build under each backend (each in a fresh
interpreter, since the backend is picked at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from spatial_trees.kernels import available_backends

BUILD_SNIPPET = (
    "import time; from spatial_trees import build, BuildConfig, SplitRule, sinusoid_manifold, BACKEND;"
    "X = sinusoid_manifold(5000, {D}, seed=0).points; t = time.perf_counter();"
    "build(X, BuildConfig(SplitRule('{rule}'), min_size=10)); print(BACKEND, time.perf_counter() - t)"
)


def cases(rng):
    for n in (10, 30, 80):
        A = rng.standard_normal((n, n))
        S = A @ A.T
        yield f"jacobi_eigh n={n}", lambda k, S=S: k.jacobi_eigh(S)
        yield f"power_iteration n={n}", lambda k, S=S: k.power_iteration(S, S[:, 0].copy())
    for m, D in ((500, 10), (2000, 10), (5000, 80)):
        X = rng.standard_normal((m, D))
        yield f"max_pair_sq m={m} D={D}", lambda k, X=X: k.max_pair_sq(X)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--build", action="store_true")
    args = ap.parse_args()

    backends = available_backends()
    names = sorted(backends)
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names) + ("   speedup" if len(names) == 2 else ""))
    for label, fn in cases(np.random.default_rng(0)):
        times = []
        for name in names:
            k = backends[name]
            fn(k)
            times.append(min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)))
        row = f"{label:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:9.1f}x" if names == ["cython", "python"] else ""
        print(row)

    if args.build:
        print()
        for rule in ("pd", "2m"):
            for D in (10, 80):
                for pure in ("0", "1"):
                    env = dict(os.environ, SPATIAL_TREES_PURE=pure)
                    code = BUILD_SNIPPET.format(D=D, rule=rule)
                    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
                    backend, secs = out.stdout.split()
                    print(f"build {rule:3s} n=5000 D={D:<3d} {backend:7s} {float(secs):7.2f}s")


if __name__ == "__main__":
    main()
