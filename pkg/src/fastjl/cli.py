"""Command-line driver: ``fastjl {gen,embed,verify,bench,calibrate}``.

Exit codes: 0 success/pass, 1 verification or calibration failure,
2 usage or configuration error.

Bench CSV columns: ``N,p,m,n,strategy,stage,wall_ns,flop_estimate``. Stages are
``M1`` (sign flip), ``M2`` (trimmed FWHT), ``M3`` (multiply by G) and
``total``; the ``per_point`` strategy only reports ``total``. ``flop_estimate``
is ``N*p`` for M1, the trimmed-FWHT addition count times ``p`` for M2, and
:func:`fastjl.fastmm.flop_estimate` for M3 (multiplications only).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import io as fio
from .errors import CalibrationError, FastJLError
from .fastmm import DEFAULT_CUTOFF, MultiplyPlan, flop_estimate
from .hadamard import fwht_op_count, next_power_of_two
from .transforms import (
    DEFAULT_C1,
    DEFAULT_C2,
    DEFAULT_CQ,
    DimensionPlan,
    embed,
    plan_dimensions,
    route_batch,
    sample_composed,
)
from .verify import (
    CALIBRATION_GRID,
    TRANSFORM_KINDS,
    calibrate,
    clopper_pearson_upper,
    distortion_report,
    gaussian_points,
    near_duplicate_points,
    run_trials,
    sample_transform,
    sphere_points,
    write_points_csv,
    write_trials_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BENCH_FIELDS = ["N", "p", "m", "n", "strategy", "stage", "wall_ns", "flop_estimate"]


class UsageError(FastJLError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    N: int | None = None
    p: int | None = None
    epsilon: float = 0.3
    eta: float = 0.05
    seed: int = 0
    transform: str = "composed"
    strategy: str = "auto"
    input: str | None = None
    output: str | None = None
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    c_q: float = DEFAULT_CQ
    cutoff: int = DEFAULT_CUTOFF
    threads: int = 1
    cap_n: bool = True

    def validate(self):
        if self.N is not None and self.N < 2:
            raise UsageError("--N must be >= 2")
        if self.p is not None and self.p < 1:
            raise UsageError("--p must be >= 1")
        if not 0 < self.epsilon < 1:
            raise UsageError("--epsilon must lie in (0, 1)")
        if not 0 < self.eta < 0.5:
            raise UsageError("--eta must lie in (0, 1/2)")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if self.cutoff < 8:
            raise UsageError("--cutoff must be >= 8")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if min(self.c1, self.c2, self.c_q) <= 0:
            raise UsageError("calibration constants must be positive")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("FJL_THREADS", "1")))
    except ValueError:
        return 1


def _config(args) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in fields and v is not None})
    cfg.validate()
    return cfg


def _writable(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"cannot write to {path}")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = _config(args)
    if cfg.N is None or cfg.p is None or cfg.output is None:
        raise UsageError("gen needs --N, --p and --output")
    _writable(cfg.output)
    maker = {"gaussian": gaussian_points, "sphere": sphere_points,
             "near-duplicate": near_duplicate_points}[args.dist]
    fio.save_matrix(cfg.output, maker(cfg.N, cfg.p, cfg.seed))
    return EXIT_OK


def _plan_for(cfg: RunConfig, p: int, m: int | None = None) -> DimensionPlan:
    return plan_dimensions(p, cfg.epsilon, cfg.eta, cfg.N, cfg.c1, cfg.c2, cap_n=cfg.cap_n, m=m)


def cmd_embed(args) -> int:
    cfg = _config(args)
    if cfg.input is None or cfg.output is None:
        raise UsageError("embed needs --input and --output")
    E = fio.load_matrix(cfg.input)
    if cfg.N is not None and cfg.N != E.shape[0]:
        raise UsageError(f"--N={cfg.N} does not match the input's {E.shape[0]} rows")
    cfg.N = E.shape[0]
    _writable(cfg.output)
    plan = _plan_for(cfg, E.shape[1], args.m)
    if cfg.transform not in ("composed", "dense", "fjlt"):
        raise UsageError("embed supports --transform composed, dense or fjlt")
    T = sample_transform(cfg.transform, plan, cfg.seed, cfg.c_q)
    timings: dict = {}
    t0 = time.perf_counter_ns()
    if cfg.transform == "composed":
        strategy = route_batch(plan) if cfg.strategy == "auto" else cfg.strategy
        Y = embed(T, E, strategy, cfg.cutoff, cfg.threads, timings)
    else:
        strategy = "batch"
        Y = T.apply_batch(E)
    timings["total"] = time.perf_counter_ns() - t0
    fio.save_matrix(cfg.output, Y)
    if args.save_transform and cfg.transform == "composed":
        fio.save_transform(args.save_transform, T)
    meta = {"plan": plan.to_dict(), "seed": cfg.seed, "transform": cfg.transform,
            "strategy": strategy, "input_shape": list(E.shape), "output_shape": list(Y.shape),
            "timings_ns": timings}
    _write_json(cfg.output + ".json", meta)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    if cfg.input is not None:
        E = fio.load_matrix(cfg.input)
        cfg.N = E.shape[0]
    else:
        if cfg.N is None or cfg.p is None:
            raise UsageError("verify needs --input or both --N and --p")
        E = gaussian_points(cfg.N, cfg.p, cfg.seed)
    if cfg.transform not in TRANSFORM_KINDS:
        raise UsageError(f"--transform must be one of {TRANSFORM_KINDS}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    for path in (args.report, args.csv, args.points_csv):
        if path:
            _writable(path)
    p = E.shape[1]
    if cfg.transform == "identity":
        plan = DimensionPlan(p, cfg.epsilon, cfg.eta, cfg.N, cfg.c1, cfg.c2,
                             next_power_of_two(cfg.N), next_power_of_two(cfg.N))
    else:
        plan = _plan_for(cfg, p, args.m)
    strategy = "naive" if cfg.strategy == "auto" else cfg.strategy
    recs = run_trials(plan, E, args.trials, cfg.seed, cfg.transform, strategy, cfg.c_q, cfg.threads)
    failures = sum(not r.passed for r in recs)
    rate = failures / len(recs)
    upper = clopper_pearson_upper(failures, len(recs), args.confidence) if args.confidence else None
    passed = (upper if upper is not None else rate) <= cfg.eta
    report = {"plan": plan.to_dict(), "transform": cfg.transform, "trials": len(recs),
              "failures": failures, "failure_rate": rate, "confidence": args.confidence,
              "upper_bound": upper, "max_distortion": max(r.max_distortion for r in recs),
              "passed": passed, "seed": cfg.seed}
    if args.report:
        _write_json(args.report, report)
    if args.csv:
        write_trials_csv(args.csv, recs)
    if args.points_csv:
        first = sample_transform(cfg.transform, plan, recs[0].seed, cfg.c_q)
        write_points_csv(args.points_csv, distortion_report(first, E, cfg.epsilon))
    print(f"{cfg.transform}: m={plan.m} n={plan.n} failures={failures}/{len(recs)} "
          f"rate={rate:.4f} -> {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def _median_ns(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return int(statistics.median(samples))


def bench_rows(N: int, p_values, m: int, n: int | None, strategies, cutoff: int,
               repeats: int, warmup: int, seed: int, threads: int = 1) -> list[dict]:
    """Timing rows for the composed transform on Gaussian data."""
    N_pad = next_power_of_two(N)
    if n is None:
        n = min(m * math.ceil(math.log(N) ** 4), N_pad)
    plan = DimensionPlan(max(p_values), 0.3, 0.05, N, 0.0, 0.0, m, n)
    T = sample_composed(plan, seed)
    ops_m2 = fwht_op_count(N_pad, T.rows)
    rows = []
    for p in p_values:
        E = gaussian_points(N, p, seed)
        for strategy in strategies:
            base = {"N": N, "p": p, "m": m, "n": n, "strategy": strategy}
            if strategy == "per_point":
                wall = _median_ns(lambda: embed(T, E, "per_point"), repeats, warmup)
                rows.append({**base, "stage": "total", "wall_ns": wall,
                             "flop_estimate": m * n * p})
                continue
            mplan = MultiplyPlan(strategy, cutoff, None, threads)
            stage_samples = {"M1": [], "M2": [], "M3": [], "total": []}
            for i in range(warmup + repeats):
                tm: dict = {}
                t0 = time.perf_counter_ns()
                T.apply_batch(E, mplan, tm)
                total = time.perf_counter_ns() - t0
                if i >= warmup:
                    for k in ("M1", "M2", "M3"):
                        stage_samples[k].append(tm[k])
                    stage_samples["total"].append(total)
            flops = {"M1": N_pad * p, "M2": ops_m2 * p, "M3": flop_estimate(m, n, p, mplan)}
            flops["total"] = sum(flops.values())
            for stage in ("M1", "M2", "M3", "total"):
                rows.append({**base, "stage": stage,
                             "wall_ns": int(statistics.median(stage_samples[stage])),
                             "flop_estimate": flops[stage]})
    return rows


def cmd_bench(args) -> int:
    cfg = _config(args)
    if cfg.N is None:
        raise UsageError("bench needs --N")
    if args.repeats < 1 or args.warmup < 0:
        raise UsageError("--repeats must be >= 1 and --warmup >= 0")
    p_values = args.p_values or ([cfg.p] if cfg.p else None)
    if not p_values:
        raise UsageError("bench needs --p or --p-values")
    m = args.m
    if m is None:
        m = _plan_for(cfg, max(p_values)).m
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in ("per_point", "naive", "blocked_fast"):
            raise UsageError(f"unknown bench strategy {s!r}")
    if cfg.output:
        _writable(cfg.output)
    rows = bench_rows(cfg.N, p_values, m, args.n, strategies, cfg.cutoff,
                      args.repeats, args.warmup, cfg.seed, cfg.threads)
    out = open(cfg.output, "w", newline="") if cfg.output else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if cfg.output:
            out.close()
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    if cfg.N is None or cfg.p is None:
        raise UsageError("calibrate needs --N and --p")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if cfg.output:
        _writable(cfg.output)
    grid = tuple(float(g) for g in args.grid.split(",")) if args.grid else CALIBRATION_GRID
    E = fio.load_matrix(cfg.input) if cfg.input else None
    try:
        res = calibrate(cfg.p, cfg.epsilon, cfg.eta, cfg.N, args.trials, cfg.seed, E=E,
                        grid=grid, cap_n=cfg.cap_n)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        if cfg.output:
            _write_json(cfg.output, {"status": "calibration-failed", "reason": str(exc)})
        return EXIT_FAIL
    rec = {"status": "ok", **res.to_dict(), "seed": cfg.seed}
    if cfg.output:
        _write_json(cfg.output, rec)
    print(f"c1={res.c1:g} c2={res.c2:g} m={res.plan.m} n={res.plan.n} "
          f"failures={res.failures}/{res.trials}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def _common(sp, data=True):
    sp.add_argument("--N", type=int, help="ambient dimension")
    sp.add_argument("--p", type=int, help="number of points")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", "-o")
    if data:
        sp.add_argument("--epsilon", type=float, default=0.3)
        sp.add_argument("--eta", type=float, default=0.05)
        sp.add_argument("--c1", type=float, default=DEFAULT_C1)
        sp.add_argument("--c2", type=float, default=DEFAULT_C2)
        sp.add_argument("--c-q", dest="c_q", type=float, default=DEFAULT_CQ)
        sp.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="Strassen cutoff")
        sp.add_argument("--threads", type=int, default=_default_threads(),
                        help="worker threads (default: $FJL_THREADS or 1)")
        sp.add_argument("--cap-n", dest="cap_n", action=argparse.BooleanOptionalAction, default=True,
                        help="clamp n to the padded dimension instead of failing")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fastjl", description="Fast Johnson-Lindenstrauss embeddings")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("gen", help="write a random point set")
    _common(g, data=False)
    g.add_argument("--dist", choices=["gaussian", "sphere", "near-duplicate"], default="gaussian")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("embed", help="embed the columns of a point set")
    _common(e)
    e.add_argument("--input", "-i")
    e.add_argument("--transform", choices=["composed", "dense", "fjlt"], default="composed")
    e.add_argument("--strategy", choices=["auto", "per_point", "blocked_fast", "naive"], default="auto")
    e.add_argument("--m", type=int, help="force the output dimension")
    e.add_argument("--save-transform", help="also write the sampled transform (FJL1)")
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("verify", help="Monte Carlo failure rate on a point set")
    _common(v)
    v.add_argument("--input", "-i")
    v.add_argument("--transform", choices=list(TRANSFORM_KINDS), default="composed")
    v.add_argument("--strategy", choices=["auto", "per_point", "blocked_fast", "naive"], default="auto")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--m", type=int, help="force the output dimension")
    v.add_argument("--confidence", type=float, default=None,
                   help="require the one-sided Clopper-Pearson bound (e.g. 0.95) to be <= eta")
    v.add_argument("--report", help="JSON report path")
    v.add_argument("--csv", help="per-trial CSV path")
    v.add_argument("--points-csv", help="per-point CSV for the first trial")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time the embedding pipeline")
    _common(b)
    b.add_argument("--p-values", type=int, nargs="+")
    b.add_argument("--m", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--strategies", default="per_point,naive,blocked_fast")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--warmup", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("calibrate", help="search c1, c2 on a grid")
    _common(c)
    c.add_argument("--input", "-i")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--grid", help="comma-separated grid (default 1,2,4,6,8,12,16)")
    c.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FastJLError, ValueError, OSError) as exc:
        if isinstance(exc, CalibrationError):
            print(f"calibration failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"fastjl {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
