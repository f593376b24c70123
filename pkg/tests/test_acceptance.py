"""Acceptance criteria 1-10, each at its stated size and tolerance.

Every test prints one ``criterion k: PASS|FAIL`` line; the lines are repeated
in the pytest terminal summary.
"""
import itertools
import math
import time

import numpy as np
import pytest

from fastjl.cli import bench_rows
from fastjl.fastmm import MultiplyPlan, multiply_blocked, multiply_naive
from fastjl.hadamard import (
    COST_CONSTANT,
    fwht_full,
    fwht_trimmed,
    fwht_trimmed_counted,
)
from fastjl.rng import trial_seed
from fastjl.transforms import (
    DimensionPlan,
    apply_composed,
    embed,
    plan_dimensions,
    sample_composed,
    sample_dense_baseline,
    sample_fjlt,
    sample_hadamard_stage,
)
from fastjl.verify import (
    approx_matmul,
    calibrate,
    clopper_pearson_upper,
    composition_check,
    gaussian_points,
    interval_contained,
    plan_composition,
    rip_bruteforce,
    riptojl_check,
    run_trials,
)

# reference configuration of criteria 5 and 8
EPS, ETA, N_REF = 0.3, 0.05, 1024


@pytest.fixture(scope="module")
def calibrated():
    """Calibrate c1, c2 once at N=1024, p=2000, eps=0.3, eta=0.05 (100 trials)."""
    return calibrate(2000, EPS, ETA, N_REF, trials=100, seed=1)


def col_rel_err(Y, X):
    return float((np.linalg.norm(Y - X, axis=0) / np.linalg.norm(X, axis=0)).max())


# 1 -----------------------------------------------------------------------------

def test_criterion_1_kernel_exactness(criterion):
    with criterion(1) as detail:
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        worst = 0.0
        for K in (4, 10, 16):
            N = 2 ** K
            for _ in range(1000):
                rows = rng.integers(0, N, size=rng.integers(1, min(N, 256) + 1))
                xi = rng.integers(-1000, 1001, size=N)
                assert np.array_equal(fwht_trimmed(xi, rows), fwht_full(xi)[rows])
                xf = rng.standard_normal(N)
                full = fwht_full(xf)[rows]
                err = np.linalg.norm(fwht_trimmed(xf, rows) - full) / np.linalg.norm(full)
                worst = max(worst, err)
        elapsed = time.perf_counter() - t0
        detail.append(f"3x1000 cases, integer exact, float max rel err {worst:.1e}, {elapsed:.1f}s")
        assert worst <= 1e-12
        assert elapsed < 60


# 2 -----------------------------------------------------------------------------

def test_criterion_2_trimmed_cost_bound(criterion):
    with criterion(2) as detail:
        rng = np.random.default_rng(102)
        worst, cases = 0.0, 0
        for K in range(1, 21):
            N = 2 ** K
            sizes = {1, 2, 3, N // 2 or 1, N, int(rng.integers(1, N + 1))}
            for size in sorted(sizes):
                rows = rng.integers(0, N, size=min(size, 4096))
                _, ops = fwht_trimmed_counted(rng.standard_normal(N), rows)
                d = np.unique(rows).size
                bound = COST_CONSTANT * N * (math.log2(d) + 1)
                worst = max(worst, ops / bound)
                cases += 1
                assert ops <= bound, f"N={N} d={d}: {ops} > {bound}"
        detail.append(f"{cases} instrumented runs, N up to 2^20, max ops/bound {worst:.3f} (C={COST_CONSTANT})")


# 3 -----------------------------------------------------------------------------

def test_criterion_3_fastmm_oracle(criterion):
    with criterion(3) as detail:
        t0 = time.perf_counter()
        rng = np.random.default_rng(103)
        worst = 0.0
        for _ in range(200):
            m, n, p = int(rng.integers(1, 257)), int(rng.integers(1, 257)), int(rng.integers(1, 4097))
            plan = MultiplyPlan(strassen_cutoff=int(rng.choice([8, 16, 32, 64])))
            G, M2 = rng.standard_normal((m, n)), rng.standard_normal((n, p))
            exact = multiply_naive(G, M2)
            err = np.linalg.norm(multiply_blocked(G, M2, plan) - exact) / np.linalg.norm(exact)
            worst = max(worst, err)
        elapsed = time.perf_counter() - t0
        detail.append(f"200 shapes, max rel Frobenius err {worst:.1e}, {elapsed:.1f}s")
        assert worst <= 1e-9
        assert elapsed < 300


# 4 -----------------------------------------------------------------------------

def test_criterion_4_batch_single_agreement(criterion):
    with criterion(4) as detail:
        plan = plan_dimensions(500, EPS, ETA, N_REF, cap_n=True)
        T = sample_composed(plan, 104)
        E = gaussian_points(N_REF, 500, 104)
        single = np.column_stack([apply_composed(T, E[:, j]) for j in range(500)])
        errs = {s: col_rel_err(embed(T, E, s), single) for s in ("per_point", "blocked_fast")}
        detail.append(f"m={plan.m} n={plan.n}; " + ", ".join(f"{s} {e:.1e}" for s, e in errs.items()))
        assert max(errs.values()) <= 1e-9


# 5 -----------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_jl_property(criterion, calibrated):
    with criterion(5) as detail:
        plan = calibrated.plan
        # fresh points and fresh transform seeds, independent of the calibration run
        E = gaussian_points(N_REF, 2000, 105)
        recs = run_trials(plan, E, 300, seed=105)
        failures = sum(not r.passed for r in recs)
        upper = clopper_pearson_upper(failures, len(recs), 0.95)
        detail.append(f"c1={calibrated.c1:g} c2={calibrated.c2:g} m={plan.m} n={plan.n}: "
                      f"{failures}/300 failures, 95% upper bound {upper:.4f}")
        assert upper <= ETA


# 6 -----------------------------------------------------------------------------

def test_criterion_6_unbiasedness(criterion):
    with criterion(6) as detail:
        N, m, samples = 100, 8, 10_000
        x = np.random.default_rng(106).standard_normal(N)
        x /= np.linalg.norm(x)
        plan = DimensionPlan(50, 0.5, 0.1, N, 1, 1, m, 32)
        families = {
            "composed": lambda s: sample_composed(plan, s),
            "dense": lambda s: sample_dense_baseline(m, N, s),
            "fjlt": lambda s: sample_fjlt(50, 0.5, N, m, 4.0, s),
        }
        z = {}
        for name, sample in families.items():
            vals = np.array([np.sum(sample(s).apply(x) ** 2) for s in range(samples)])
            se = vals.std(ddof=1) / math.sqrt(samples)
            z[name] = (vals.mean() - 1.0) / se
        detail.append(", ".join(f"{k} z={v:+.2f}" for k, v in z.items()))
        assert all(abs(v) <= 3 for v in z.values())


# 7 -----------------------------------------------------------------------------

def test_criterion_7_composition(criterion):
    with criterion(7) as detail:
        grid = 0
        for eps in np.linspace(0.01, 0.99, 99):
            t = eps / 3
            assert (1 - t) ** 2 >= 1 - eps and (1 + t) ** 2 <= 1 + eps
            for a, b in itertools.product(np.linspace(1 - t, 1 + t, 11), repeat=2):
                assert interval_contained(eps, a, b)
                grid += 1
        plan = plan_composition(50, 0.9, 0.2, N_REF, c1=8, c2=1, cap_n=True)
        E = gaussian_points(N_REF, 50, 107)
        rep = composition_check(plan, E, trials=60, seed=107)
        detail.append(f"{grid} grid products contained; MC eps=0.9 eta=0.2 m={plan.m} n={plan.n}: "
                      f"{rep.composed_failures}/60 composed failures, {rep.interval_violations} violations")
        assert rep.interval_violations == 0
        assert rep.composed_failure_rate <= plan.eta


# 8 -----------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_approx_matmul(criterion, calibrated):
    with criterion(8) as detail:
        q = p = 64
        # the sketch sees the q + p columns of [A^T, B]
        plan = plan_dimensions(q + p, EPS, ETA, N_REF, calibrated.c1, calibrated.c2, cap_n=True)
        rng = np.random.default_rng(108)
        ok, worst = 0, 0.0
        for t in range(100):
            A, B = rng.standard_normal((q, N_REF)), rng.standard_normal((N_REF, p))
            _, ratio = approx_matmul(A, B, sample_composed(plan, trial_seed(108, t)))
            ok += ratio <= EPS
            worst = max(worst, ratio)
        detail.append(f"m={plan.m}: {ok}/100 within eps, worst ratio {worst:.3f}")
        assert ok >= 95


# 9 -----------------------------------------------------------------------------

def test_criterion_9_rip_toy(criterion):
    with criterion(9) as detail:
        stage = sample_hadamard_stage(16, 32, seed=109)
        Phi = stage.matrix()
        rep = rip_bruteforce(Phi, 2)
        oracle = 0.0
        for S in itertools.combinations(range(32), 2):
            cols = Phi[:, S]
            lam = np.linalg.eigvalsh(cols.T @ cols)
            oracle = max(oracle, abs(lam[-1] - 1), abs(1 - lam[0]))
        assert abs(rep.delta_hat - oracle) <= 1e-10
        E = gaussian_points(32, 5, 109)
        toy = riptojl_check(Phi, 2, E, 0.3, ETA, trials=20, seed=109)
        # k = 2 is far below 40 ln(4p/eta), so no verdict may be issued
        assert not toy.hypothesis_met and toy.verdict == "hypothesis not met"
        # an instance that meets both hypotheses: orthogonal H/sqrt(N) with k = N
        N = 128
        H = fwht_full(np.eye(N)) / math.sqrt(N)
        met = riptojl_check(H, N, gaussian_points(N, 1, 109), 0.5, 0.45, trials=50, seed=109)
        assert met.hypothesis_met and met.failure_rate <= met.eta and met.verdict == "pass"
        detail.append(f"delta_hat={rep.delta_hat:.6f} vs oracle diff {abs(rep.delta_hat - oracle):.1e}; "
                      f"k=2 -> {toy.verdict!r}; k=N=128 -> {met.verdict!r} ({met.failures}/50)")


# 10 ----------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_10_performance_direction(criterion):
    with criterion(10) as detail:
        N, m = 4096, 256
        n = min(m * math.ceil(math.log(N) ** 4), N)
        ps = (2048, 4096, 8192)
        rows = bench_rows(N, ps, m, n, ["per_point", "blocked_fast"], cutoff=64,
                          repeats=5, warmup=1, seed=110)
        wall = {(r["p"], r["strategy"], r["stage"]): r["wall_ns"] for r in rows}
        speedup = wall[(8192, "per_point", "total")] / wall[(8192, "blocked_fast", "total")]
        spreads = {}
        for stage in ("M1", "M2", "M3", "total"):
            per_col = [wall[(p, "blocked_fast", stage)] / p for p in ps]
            spreads[stage] = max(per_col) / min(per_col)
        detail.append(f"n={n}; speedup at p=8192 {speedup:.2f}x; per-column time spread "
                      + ", ".join(f"{k} {v:.2f}" for k, v in spreads.items()))
        assert speedup >= 1.0
        assert all(v <= 2.0 for v in spreads.values())
