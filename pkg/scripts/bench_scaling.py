"""Stage timings of the composed transform against p, per_point vs blocked_fast.

Defaults reproduce the reference configuration N=4096, m=256, n capped at N.
Writes a CSV with the same columns as ``fastjl bench``.
"""
import argparse
import csv
import math

from fastjl.cli import BENCH_FIELDS, bench_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--m", type=int, default=256)
    ap.add_argument("--p-values", type=int, nargs="+", default=[1024, 2048, 4096, 8192])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--cutoff", type=int, default=64)
    ap.add_argument("--output", default="bench_scaling.csv")
    args = ap.parse_args()

    n = min(args.m * math.ceil(math.log(args.N) ** 4), 1 << (args.N - 1).bit_length())
    rows = bench_rows(args.N, args.p_values, args.m, n, ["per_point", "naive", "blocked_fast"],
                      args.cutoff, args.repeats, 1, seed=0)
    with open(args.output, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)

    totals = {(r["p"], r["strategy"]): r["wall_ns"] for r in rows if r["stage"] == "total"}
    print(f"N={args.N} m={args.m} n={n}")
    print(f"{'p':>6} {'per_point ms':>13} {'naive ms':>9} {'blocked ms':>11} {'speedup':>8}")
    for p in args.p_values:
        pp, nv, bf = (totals[(p, s)] / 1e6 for s in ("per_point", "naive", "blocked_fast"))
        print(f"{p:>6} {pp:>13.1f} {nv:>9.1f} {bf:>11.1f} {pp / bf:>8.2f}")


if __name__ == "__main__":
    main()
