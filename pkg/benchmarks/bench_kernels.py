"""Compiled vs pure-Python F_p[t] kernels.

    python3 benchmarks/bench_kernels.py [--sizes 16,64,256,1024] [--prime 17] [--engine]

Prints one row per (kernel, size) with the best-of-``--repeat`` time per call
for each backend and the speedup. ``--engine`` also times a full F1 engine
run over F_17[[t]] under each backend.
"""

import argparse
import importlib
import os
import random
import subprocess
import sys
import timeit

from ultrabroyden import _kernels_py

try:
    fast = importlib.import_module("ultrabroyden._kernels")
except ImportError:
    fast = None


def best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench(sizes, p, repeat):
    rng = random.Random(0)
    rows = []
    for n in sizes:
        a = [rng.randrange(p) for _ in range(n)]
        b = [rng.randrange(p) for _ in range(n)]
        a[0] = a[0] or 1
        number = max(1, 20000 // (n + 1))
        for name, call in (
            ("mul_trunc", lambda mod: mod.mul_trunc(a, b, n, p)),
            ("inv_trunc", lambda mod: mod.inv_trunc(a, n, p)),
        ):
            t_py = best(lambda: call(_kernels_py), number, repeat)
            t_cy = best(lambda: call(fast), number, repeat) if fast else float("nan")
            if fast:
                assert call(fast) == call(_kernels_py), f"{name} mismatch at n={n}"
            rows.append((name, n, t_py, t_cy))
    return rows


ENGINE_SNIPPET = """
import time
from ultrabroyden import Fpt, KERNEL_BACKEND
from ultrabroyden.engine import run_engine
from ultrabroyden.systems import builtin_family
ctx = Fpt(17)
t0 = time.perf_counter()
run_engine(builtin_family("F1"), ctx.uniformizer_power(1), [1, -1], {N})
print(KERNEL_BACKEND, time.perf_counter() - t0)
"""


def bench_engine(n):
    out = []
    for pure in ("0", "1"):
        env = dict(os.environ, UB_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", ENGINE_SNIPPET.format(N=n)], env=env,
                             capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out.append((backend, float(secs)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,256,1024")
    ap.add_argument("--prime", type=int, default=17)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--engine", action="store_true")
    ap.add_argument("--engine-n", type=int, default=512)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    if fast is None:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'kernel':<10} {'n':>6} {'python (us)':>12} {'cython (us)':>12} {'speedup':>8}")
    for name, n, t_py, t_cy in bench(sizes, args.prime, args.repeat):
        print(f"{name:<10} {n:>6} {t_py * 1e6:>12.1f} {t_cy * 1e6:>12.1f} {t_py / t_cy:>8.2f}")
    if args.engine:
        for backend, secs in bench_engine(args.engine_n):
            print(f"engine F1 over F_17[[t]], N={args.engine_n}: {backend:<7} {secs:.3f} s")


if __name__ == "__main__":
    main()
