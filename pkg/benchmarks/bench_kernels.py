"""Time the compiled and pure-Python evaluation kernels on the same workloads.

    python benchmarks/bench_kernels.py [--width 20] [--steps 65536] [--repeat 3]

Both backends are checked to agree before anything is timed.
"""
import argparse
import time

import numpy as np

from tadic import _backend
from tadic.catalog import SUITE
from tadic.expr import tfunction

CASES = ["klimov_shamir", "exponential", "rational", "monster"]


def best_of(repeat, fn):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=20)
    ap.add_argument("--steps", type=int, default=1 << 16)
    ap.add_argument("--points", type=int, default=1 << 16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled kernels not built; timing the pure-Python fallback only")
    xs = np.random.default_rng(0).integers(0, 1 << args.width, args.points, dtype=np.uint64)

    print(f"{'map':<14}{'workload':<10}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name in CASES:
        fs = {b: tfunction(SUITE[name], args.width).with_kernels(_backend.get(b)) for b in backends}
        ref = fs["python"]
        for b, f in fs.items():
            assert np.array_equal(f.orbit(1, 256), ref.orbit(1, 256)), b
            assert np.array_equal(f.values(xs[:256]), ref.values(xs[:256])), b
        workloads = {
            "orbit": lambda f: f.orbit(1, args.steps),
            "values": lambda f: f.values(xs),
        }
        for label, work in workloads.items():
            times = {b: best_of(args.repeat, lambda f=f: work(f)) for b, f in fs.items()}
            row = f"{name:<14}{label:<10}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
            if "cython" in times:
                row += f"{times['python'] / times['cython']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
