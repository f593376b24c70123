"""Empirical checks of the Johnson-Lindenstrauss property and related facts.

A transform fails on a point set when some nonzero column ``x`` has
``| |Ax|^2 / |x|^2 - 1 | > epsilon``. The failure rate is the fraction of
independently sampled transforms that fail on a fixed point set; trial ``t``
of a run seeded with ``s`` draws its transform from
``fastjl.rng.trial_seed(s, t)``, so results do not depend on scheduling.

Failure-rate acceptance uses the one-sided Clopper-Pearson upper bound at 95%.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import beta

from . import rng as _rng
from .errors import CalibrationError, EmptyReportError, InstanceTooLargeError, PlanningError
from .fastmm import multiply_naive
from .transforms import (
    DEFAULT_CQ,
    DimensionPlan,
    IdentityTransform,
    embed,
    plan_dimensions,
    sample_composed,
    sample_dense_baseline,
    sample_fjlt,
    sample_hadamard_stage,
    sample_signs_matrix,
)

TRANSFORM_KINDS = ("composed", "dense", "fjlt", "identity")
CALIBRATION_GRID = (1, 2, 4, 6, 8, 12, 16)
RIP_GUARD = 10 ** 6


# -- point sets ---------------------------------------------------------------

def gaussian_points(N: int, p: int, seed: int) -> np.ndarray:
    return _rng.stream(seed, "data").standard_normal((N, p))


def sphere_points(N: int, p: int, seed: int) -> np.ndarray:
    E = gaussian_points(N, p, seed)
    return E / np.linalg.norm(E, axis=0)


def near_duplicate_points(N: int, p: int, seed: int, spread: float = 1e-3) -> np.ndarray:
    """``p`` small perturbations of one random direction."""
    g = _rng.stream(seed, "data")
    base = g.standard_normal((N, 1))
    return base + spread * g.standard_normal((N, p))


# -- distortion ---------------------------------------------------------------

@dataclass
class DistortionReport:
    per_point_ratio: np.ndarray
    max_distortion: float
    mean_distortion: float
    epsilon_target: float
    passed: bool
    zero_columns: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_point_ratio"] = self.per_point_ratio.tolist()
        return d


def _apply(applier, E):
    if hasattr(applier, "apply_batch"):
        return applier.apply_batch(E)
    return applier(E)


def distortion_report(applier, E, epsilon: float) -> DistortionReport:
    """Squared-norm ratios ``|Ax|^2 / |x|^2`` over the nonzero columns of ``E``.

    ``applier`` is a transform with ``apply_batch`` or a callable mapping an
    ``N x p`` matrix to its image.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    norms = np.einsum("ij,ij->j", E, E)
    keep = norms > 0
    if not keep.any():
        raise EmptyReportError("point set has no nonzero columns")
    Y = np.asarray(_apply(applier, E[:, keep]))
    ratio = np.einsum("ij,ij->j", Y, Y) / norms[keep]
    dev = np.abs(ratio - 1.0)
    worst = float(dev.max())
    return DistortionReport(ratio, worst, float(dev.mean()), float(epsilon),
                            bool(worst <= epsilon), int((~keep).sum()))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    max_distortion: float
    mean_distortion: float
    passed: bool


def sample_transform(kind: str, plan: DimensionPlan, seed: int, c_q: float = DEFAULT_CQ):
    if kind == "composed":
        return sample_composed(plan, seed)
    if kind == "dense":
        return sample_dense_baseline(plan.m, plan.N, seed)
    if kind == "fjlt":
        return sample_fjlt(plan.p, plan.epsilon, plan.N, plan.m, c_q, seed)
    if kind == "identity":
        return IdentityTransform(plan.N)
    raise ValueError(f"unknown transform kind {kind!r}; expected one of {TRANSFORM_KINDS}")


def _run_trial(plan, E, t, seed, kind, strategy, c_q):
    s = _rng.trial_seed(seed, t)
    T = sample_transform(kind, plan, s, c_q)
    if kind == "composed":
        applier = lambda X: embed(T, X, strategy)  # noqa: E731
    else:
        applier = T
    rep = distortion_report(applier, E, plan.epsilon)
    return TrialRecord(t, s, rep.max_distortion, rep.mean_distortion, rep.passed)


def run_trials(plan: DimensionPlan, E, trials: int, seed: int, kind: str = "composed",
               strategy: str = "naive", c_q: float = DEFAULT_CQ, threads: int = 1,
               stop_after_failures: int | None = None) -> list[TrialRecord]:
    """One record per sampled transform, in trial order.

    With ``stop_after_failures`` the run ends as soon as that many trials have
    failed (sequential only); the returned list is then shorter than ``trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    E = np.asarray(E, dtype=np.float64)
    if stop_after_failures is None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: _run_trial(plan, E, t, seed, kind, strategy, c_q),
                                 range(trials)))
    out, failures = [], 0
    for t in range(trials):
        rec = _run_trial(plan, E, t, seed, kind, strategy, c_q)
        out.append(rec)
        failures += not rec.passed
        if stop_after_failures is not None and failures >= stop_after_failures:
            break
    return out


def failure_rate(plan: DimensionPlan, E, trials: int, seed: int, kind: str = "composed",
                 strategy: str = "naive", c_q: float = DEFAULT_CQ, threads: int = 1) -> float:
    """Fraction of ``trials`` fresh transforms whose distortion report fails on ``E``."""
    recs = run_trials(plan, E, trials, seed, kind, strategy, c_q, threads)
    return sum(not r.passed for r in recs) / trials


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided exact binomial interval for ``k`` successes in ``n`` trials."""
    a = (1 - confidence) / 2
    lo = 0.0 if k == 0 else float(beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a, k + 1, n - k))
    return lo, hi


def clopper_pearson_upper(k: int, n: int, confidence: float = 0.95) -> float:
    """One-sided upper confidence bound for a binomial rate."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n and n >= 1")
    if k == n:
        return 1.0
    return float(beta.ppf(confidence, k + 1, n - k))


def max_allowed_failures(trials: int, eta: float, confidence: float = 0.95) -> int:
    """Largest failure count whose upper bound stays <= eta, or -1 if none does."""
    k = -1
    while k + 1 <= trials and clopper_pearson_upper(k + 1, trials, confidence) <= eta:
        k += 1
    return k


# -- restricted isometry --------------------------------------------------------

@dataclass
class RipReport:
    k: int
    delta_hat: float
    supports_checked: int
    worst_support: tuple[int, ...] = field(default_factory=tuple)


def rip_bruteforce(Phi, k: int, guard: int = RIP_GUARD, chunk: int = 20000) -> RipReport:
    """Exact ``(k, delta)`` RIP constant by enumerating every size-k support.

    For each support ``S`` the deviation is the largest ``|lambda - 1|`` over
    the eigenvalues of ``Phi_S^T Phi_S``.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    if Phi.ndim != 2:
        raise ValueError("Phi must be a matrix")
    N = Phi.shape[1]
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N={N}, got k={k}")
    total = math.comb(N, k)
    if total > guard:
        raise InstanceTooLargeError(f"C({N}, {k}) = {total} supports exceeds the guard {guard}")
    gram = Phi.T @ Phi
    combos = itertools.combinations(range(N), k)
    best, best_support = -1.0, ()
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        sub = gram[block[:, :, None], block[:, None, :]]
        lam = np.linalg.eigvalsh(sub)
        dev = np.maximum(np.abs(lam[:, -1] - 1.0), np.abs(1.0 - lam[:, 0]))
        i = int(dev.argmax())
        if dev[i] > best:
            best, best_support = float(dev[i]), tuple(int(v) for v in block[i])
    return RipReport(k, best, total, best_support)


@dataclass
class RipToJlReport:
    delta_hat: float
    k: int
    k_required: float
    epsilon: float
    eta: float
    hypothesis_met: bool
    trials: int
    failures: int
    failure_rate: float
    verdict: str  # "pass", "fail" or "hypothesis not met"


def riptojl_check(Phi, k: int, E, epsilon: float, eta: float, trials: int, seed: int,
                  guard: int = RIP_GUARD) -> RipToJlReport:
    """Measure ``delta_hat`` for ``Phi`` and the failure rate of ``Phi D_xi`` on ``E``.

    A verdict is only issued when ``delta_hat <= epsilon/4`` and
    ``k >= 40 ln(4p/eta)``; otherwise the verdict is ``"hypothesis not met"``.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    rip = rip_bruteforce(Phi, k, guard)
    p = E.shape[1]
    k_required = 40 * math.log(4 * p / eta)
    met = rip.delta_hat <= epsilon / 4 and k >= k_required
    failures = 0
    for t in range(trials):
        xi = _rng.signs(_rng.stream(_rng.trial_seed(seed, t), "xi"), Phi.shape[1]).astype(np.float64)
        rep = distortion_report(lambda X, xi=xi: Phi @ (xi[:, None] * X), E, epsilon)
        failures += not rep.passed
    rate = failures / trials
    if not met:
        verdict = "hypothesis not met"
    else:
        verdict = "pass" if rate <= eta else "fail"
    return RipToJlReport(rip.delta_hat, k, k_required, epsilon, eta, met, trials, failures, rate, verdict)


# -- composition ----------------------------------------------------------------

def plan_composition(p: int, epsilon: float, eta: float, N: int, c1: float, c2: float,
                     cap_n: bool = False) -> DimensionPlan:
    """Size both stages for ``(epsilon/3, eta/4)``; the plan records the composed targets."""
    stage = plan_dimensions(p, epsilon / 3, eta / 4, N, c1, c2, cap_n=cap_n)
    return DimensionPlan(p, epsilon, eta, N, c1, c2, stage.m, stage.n, stage.n_capped)


@dataclass
class CompositionReport:
    trials: int
    epsilon: float
    eta: float
    stage_a_failures: int
    stage_b_failures: int
    either_stage_failures: int
    composed_failures: int
    interval_violations: int
    composed_failure_rate: float
    passed: bool


def composition_check(plan: DimensionPlan, E, trials: int, seed: int,
                      inner: str = "hadamard") -> CompositionReport:
    """Sample independent ``B`` (n x N subsampled Hadamard stage) and ``A`` (m x n dense signs).

    Each stage is judged at ``epsilon/3``. For every point preserved by both
    stages the composed ratio must lie in ``[(1-epsilon/3)^2, (1+epsilon/3)^2]``;
    any point outside counts as an interval violation. ``inner="identity"``
    replaces ``B`` by the identity (then ``A`` is m x N).
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    eps = plan.epsilon
    third = eps / 3
    lo, hi = (1 - third) ** 2, (1 + third) ** 2
    norms = np.einsum("ij,ij->j", E, E)
    keep = norms > 0
    if not keep.any():
        raise EmptyReportError("point set has no nonzero columns")
    E, norms = E[:, keep], norms[keep]
    counts = dict(a=0, b=0, either=0, composed=0, violations=0)
    for t in range(trials):
        s = _rng.trial_seed(seed, t)
        if inner == "identity":
            B = IdentityTransform(plan.N)
        elif inner == "hadamard":
            B = sample_hadamard_stage(plan.n, plan.N, s)
        else:
            raise ValueError(f"unknown inner stage {inner!r}")
        A = sample_signs_matrix(plan.m, B.m, s, tag="G")
        BE = B.apply_batch(E)
        ABE = A.apply_batch(BE)
        nb = np.einsum("ij,ij->j", BE, BE)
        na = np.einsum("ij,ij->j", ABE, ABE)
        rb = nb / norms
        with np.errstate(divide="ignore", invalid="ignore"):
            ra = np.where(nb > 0, na / nb, 0.0)
        rc = na / norms
        ok_b = np.abs(rb - 1) <= third
        ok_a = np.abs(ra - 1) <= third
        both = ok_a & ok_b
        # rc equals ra*rb up to rounding; allow a few ulps at the interval ends
        tol = 1e-12
        outside = (rc < lo * (1 - tol)) | (rc > hi * (1 + tol))
        counts["violations"] += int((both & outside).sum())
        counts["a"] += not ok_a.all()
        counts["b"] += not ok_b.all()
        counts["either"] += not both.all()
        counts["composed"] += bool((np.abs(rc - 1) > eps).any())
    rate = counts["composed"] / trials
    return CompositionReport(trials, eps, plan.eta, counts["a"], counts["b"], counts["either"],
                             counts["composed"], counts["violations"], rate,
                             bool(rate <= plan.eta and counts["violations"] == 0))


def interval_contained(epsilon: float, a: float, b: float) -> bool:
    """For stage ratios within ``1 +- epsilon/3``, is ``a*b`` in both intervals?"""
    t = epsilon / 3
    prod = a * b
    return (1 - t) ** 2 <= prod <= (1 + t) ** 2 and 1 - epsilon <= prod <= 1 + epsilon


# -- approximate matrix multiplication ------------------------------------------

def approx_matmul(A, B, S) -> tuple[np.ndarray, float]:
    """Sketch ``A @ B`` as ``(S A^T)^T (S B)``.

    Both sketches come from one batch application of ``S`` to ``[A^T, B]``.
    Returns the sketched product and ``|AB - A_hat B_hat|_F / (|A|_F |B|_F)``
    (zero when either factor is zero).
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot multiply {A.shape} by {B.shape}")
    q = A.shape[0]
    joint = _apply(S, np.hstack([A.T, B]))
    A_hat = joint[:, :q].T
    B_hat = joint[:, q:]
    product = A_hat @ B_hat
    scale = np.linalg.norm(A) * np.linalg.norm(B)
    if scale == 0:
        return product, 0.0
    exact = multiply_naive(A, B)
    return product, float(np.linalg.norm(exact - product) / scale)


# -- calibration ----------------------------------------------------------------

@dataclass
class CalibrationStep:
    stage: str
    c1: float
    c2: float
    m: int | None
    n: int | None
    trials_run: int
    failures: int
    upper_bound: float | None
    passed: bool
    note: str = ""


@dataclass
class CalibrationResult:
    c1: float
    c2: float
    plan: DimensionPlan
    trials: int
    failures: int
    upper_bound: float
    steps: list[CalibrationStep]

    def to_dict(self) -> dict:
        return {
            "c1": self.c1, "c2": self.c2, "plan": self.plan.to_dict(), "trials": self.trials,
            "failures": self.failures, "upper_bound": self.upper_bound,
            "steps": [asdict(s) for s in self.steps],
        }


def calibrate(p: int, epsilon: float, eta: float, N: int, trials: int, seed: int,
              E=None, grid=CALIBRATION_GRID, cap_n: bool = True, kind: str = "composed",
              confidence: float = 0.95) -> CalibrationResult:
    """Smallest ``c1`` on ``grid`` (with ``c2`` at the grid maximum), then smallest ``c2``.

    A grid value passes when the one-sided Clopper-Pearson bound on the failure
    rate over ``trials`` is at most ``eta``. Trials stop early once the failure
    count rules that out. Every grid value sees the same trial seeds.
    Raises :class:`CalibrationError` when no value passes.
    """
    if E is None:
        E = gaussian_points(N, p, seed)
    grid = sorted(grid)
    allowed = max_allowed_failures(trials, eta, confidence)
    steps: list[CalibrationStep] = []
    if allowed < 0:
        raise CalibrationError(
            f"{trials} trials cannot certify a failure rate <= {eta} at {confidence:.0%} confidence")
    cache: dict[tuple[int, int], tuple[int, int]] = {}

    def attempt(stage, c1, c2):
        try:
            plan = plan_dimensions(p, epsilon, eta, N, c1, c2, cap_n=cap_n)
        except PlanningError as exc:
            steps.append(CalibrationStep(stage, c1, c2, None, None, 0, 0, None, False, str(exc)))
            return None
        key = (plan.m, plan.n)
        if key not in cache:
            recs = run_trials(plan, E, trials, seed, kind, stop_after_failures=allowed + 1)
            cache[key] = (len(recs), sum(not r.passed for r in recs))
        ran, fails = cache[key]
        ok = fails <= allowed
        ub = clopper_pearson_upper(fails, ran, confidence)
        steps.append(CalibrationStep(stage, c1, c2, plan.m, plan.n, ran, fails, ub, ok))
        return (plan, fails, ub) if ok else None

    c2_max = grid[-1]
    chosen_c1 = None
    for c1 in grid:
        if attempt("c1", c1, c2_max):
            chosen_c1 = c1
            break
    if chosen_c1 is None:
        raise CalibrationError("no c1 on the grid meets the target failure rate")
    for c2 in grid:
        found = attempt("c2", chosen_c1, c2)
        if found:
            plan, fails, ub = found
            return CalibrationResult(chosen_c1, c2, plan, trials, fails, ub, steps)
    raise CalibrationError("no c2 on the grid meets the target failure rate")  # pragma: no cover


# -- report files -----------------------------------------------------------------

def write_trials_csv(path, records: list[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "seed", "max_distortion", "mean_distortion", "passed"])
        for r in records:
            w.writerow([r.trial, r.seed, repr(r.max_distortion), repr(r.mean_distortion), int(r.passed)])


def write_points_csv(path, report: DistortionReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point", "ratio", "distortion"])
        for i, r in enumerate(report.per_point_ratio):
            w.writerow([i, repr(float(r)), repr(abs(float(r) - 1.0))])
