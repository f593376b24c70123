"""Calibrate c1, c2 at the desk reference configuration and print every grid step.

N=1024, p=2000 Gaussian points, eps=0.3, eta=0.05, 100 trials. The library
defaults DEFAULT_C1, DEFAULT_C2 come from this run.
"""
import argparse
import json

from fastjl.verify import calibrate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--p", type=int, default=2000)
    ap.add_argument("--epsilon", type=float, default=0.3)
    ap.add_argument("--eta", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--output", default=None, help="optional JSON dump of the result")
    args = ap.parse_args()

    res = calibrate(args.p, args.epsilon, args.eta, args.N, args.trials, args.seed)
    for s in res.steps:
        ub = "-" if s.upper_bound is None else f"{s.upper_bound:.4f}"
        print(f"{s.stage} c1={s.c1:<4g} c2={s.c2:<4g} m={s.m} n={s.n} "
              f"failures={s.failures}/{s.trials_run} upper={ub} {'ok' if s.passed else 'no'} {s.note}")
    print(f"chosen c1={res.c1:g} c2={res.c2:g} m={res.plan.m} n={res.plan.n}")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(res.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
