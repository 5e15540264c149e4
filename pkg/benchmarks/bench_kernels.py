"""Compare the compiled and pure-Python interleaving explorers.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

from warpcons import _kernels_py, kernels

CASES = [
    # (label, values, capacity, planned steps, reader length, lockstep)
    ("2 appends, n=2, reader", [10, 20], 2, [4, 4], 2, False),
    ("3 appends, n=1, no reader", [10, 20, 30], 1, [4, 4, 4], 0, False),
    ("3 appends, n=2, one crash", [10, 20, 30], 2, [4, 4, 2], 0, False),
    ("3 appends, n=3, reader, lock-step", [10, 20, 30], 3, [4, 4, 4], 3, True),
]


def timed(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = kernels.IMPLEMENTATION == "cython"
    if not compiled:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace` first")
    print(f"{'case':38s} {'schedules':>10s} {'python s':>9s} {'compiled s':>10s} {'speedup':>8s}")
    for label, values, cap, planned, reader, lockstep in CASES:
        argv = (values, cap, planned, reader, lockstep)
        tp, ref = timed(_kernels_py.explore, argv, args.repeat)
        if compiled:
            tc, got = timed(kernels.explore, argv, args.repeat)
            assert got == ref, f"kernels disagree on {label}"
            print(f"{label:38s} {ref[0]:10d} {tp:9.3f} {tc:10.4f} {tp / tc:7.1f}x")
        else:
            print(f"{label:38s} {ref[0]:10d} {tp:9.3f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
