"""Wall time of multiply_blocked across Strassen cutoffs, against plain BLAS.

Used to pick DEFAULT_CUTOFF. With numpy the leaf products go to BLAS, so
smaller cutoffs mostly add Python overhead.
"""
import argparse
import time

import numpy as np

from fastjl.fastmm import MultiplyPlan, flop_estimate, multiply_blocked


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=256)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--p", type=int, default=4096)
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    G = rng.choice([-1.0, 1.0], size=(args.m, args.n))
    M2 = rng.standard_normal((args.n, args.p))
    naive = MultiplyPlan("naive")
    t = best_of(lambda: multiply_blocked(G, M2, naive), args.repeats)
    print(f"naive      {t * 1e3:9.1f} ms  mults {flop_estimate(args.m, args.n, args.p, naive):.3e}")
    for c in args.cutoffs:
        plan = MultiplyPlan(strassen_cutoff=c)
        t = best_of(lambda: multiply_blocked(G, M2, plan), args.repeats)
        print(f"cutoff={c:<4} {t * 1e3:9.1f} ms  mults {flop_estimate(args.m, args.n, args.p, plan):.3e}")


if __name__ == "__main__":
    main()
