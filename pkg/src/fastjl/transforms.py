"""Johnson-Lindenstrauss transforms: sampling and application.

The main object is :class:`ComposedTransform`, the product ``G R H D_xi`` of

* ``D_xi``  a random +-1 diagonal,
* ``H``     the Sylvester Hadamard matrix (entries +-1, applied by FWHT),
* ``R``     ``n`` rows drawn uniformly with replacement,
* ``G``     a dense m x n matrix of independent +-1/sqrt(m) entries.

``R H D_xi`` is scaled by ``1/sqrt(n)`` so that it preserves squared norms in
expectation; ``G`` carries its own ``1/sqrt(m)``. Inputs whose length is not a
power of two are zero-padded, which leaves their norm unchanged.

Every transform exposes ``apply(x)`` for one point and ``apply_batch(E)`` for
the columns of an ``N x p`` matrix.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import rng as _rng
from .errors import DimensionError, PlanningError
from .fastmm import DEFAULT_CUTOFF, MultiplyPlan, multiply_blocked
from .hadamard import TrimSchedule, fwht_full, fwht_trimmed, next_power_of_two

# smallest grid values passing 100 trials at N=1024, p=2000, eps=0.3, eta=0.05
# (scripts/calibrate_desk.py); with n capped at N_pad, c2 does not bind there
DEFAULT_C1 = 8.0
DEFAULT_C2 = 1.0
DEFAULT_CQ = 1.0
ROUTES = ("auto", "per_point", "blocked_fast", "naive")


@dataclass(frozen=True)
class DimensionPlan:
    """Embedding dimensions for ``p`` points in ``R^N`` at distortion ``epsilon``.

    ``m`` is the output dimension and ``n`` the intermediate dimension after
    the subsampled Hadamard stage. ``n_capped`` records that the formula value
    of ``n`` exceeded ``N_pad`` and was clamped (only when explicitly allowed).
    """

    p: int
    epsilon: float
    eta: float
    N: int
    c1: float
    c2: float
    m: int
    n: int
    n_capped: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise PlanningError(f"m must be >= 1, got {self.m}")
        if self.m > self.n:
            raise PlanningError(f"m <= n violated: m={self.m}, n={self.n}")
        if self.n > self.N_pad:
            raise PlanningError(f"n <= N_pad violated: n={self.n}, N_pad={self.N_pad}")

    @property
    def N_pad(self) -> int:
        return next_power_of_two(self.N)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "epsilon": self.epsilon, "eta": self.eta, "N": self.N,
            "N_pad": self.N_pad, "c1": self.c1, "c2": self.c2, "m": self.m,
            "n": self.n, "n_capped": self.n_capped,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DimensionPlan":
        return cls(int(d["p"]), float(d["epsilon"]), float(d["eta"]), int(d["N"]),
                   float(d["c1"]), float(d["c2"]), int(d["m"]), int(d["n"]),
                   bool(d.get("n_capped", False)))


def plan_dimensions(p: int, epsilon: float, eta: float, N: int,
                    c1: float = DEFAULT_C1, c2: float = DEFAULT_C2, *,
                    cap_n: bool = False, m: int | None = None) -> DimensionPlan:
    """Pick ``m = ceil(c1 eps^-2 ln(p/eta))`` and ``n = ceil(c2 eps^-2 ln(p/eta) (ln N)^4)``.

    Raises :class:`PlanningError` if ``n`` exceeds the padded dimension, unless
    ``cap_n`` is set, in which case ``n`` is clamped to ``N_pad``. ``m`` may be
    forced for stress runs.
    """
    if p < 1:
        raise PlanningError(f"p must be >= 1, got {p}")
    if not 0 < epsilon < 1:
        raise PlanningError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < eta < 0.5:
        raise PlanningError(f"eta must lie in (0, 1/2), got {eta}")
    if N < 2:
        raise PlanningError(f"N must be >= 2, got {N}")
    if c1 <= 0 or c2 <= 0:
        raise PlanningError("c1 and c2 must be positive")
    base = math.log(p / eta) / epsilon ** 2
    m_formula = math.ceil(c1 * base)
    n_formula = math.ceil(c2 * base * math.log(N) ** 4)
    N_pad = next_power_of_two(N)
    m = m_formula if m is None else int(m)
    n = n_formula
    capped = False
    if n > N_pad:
        if not cap_n:
            raise PlanningError(
                f"infeasible plan: n = ceil(c2 eps^-2 ln(p/eta) (ln N)^4) = {n} > N_pad = {N_pad}")
        n, capped = N_pad, True
    if m > n:
        raise PlanningError(f"infeasible plan: m = {m} > n = {n}")
    return DimensionPlan(p, epsilon, eta, N, c1, c2, m, n, capped)


def _pad_vector(x, N_input, N_pad):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != N_input:
        raise DimensionError(f"expected a vector of length {N_input}, got shape {x.shape}")
    if N_pad == N_input:
        return x
    out = np.zeros(N_pad)
    out[:N_input] = x
    return out


def _pad_matrix(E, N_input, N_pad):
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2 or E.shape[0] != N_input:
        raise DimensionError(f"expected a matrix with {N_input} rows, got shape {E.shape}")
    if N_pad == N_input:
        return E
    out = np.zeros((N_pad, E.shape[1]))
    out[:N_input] = E
    return out


@dataclass(frozen=True, eq=False)
class DenseSignMatrix:
    """An m x n matrix with entries ``signs[j, k] / sqrt(m)``."""

    signs: np.ndarray

    def __post_init__(self):
        s = self.signs
        if s.ndim != 2 or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be a 2-D array of +-1")

    @property
    def m(self) -> int:
        return self.signs.shape[0]

    @property
    def n(self) -> int:
        return self.signs.shape[1]

    @property
    def N_input(self) -> int:
        return self.n

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.m)

    @cached_property
    def dense(self) -> np.ndarray:
        return self.signs.astype(np.float64) * self.scale

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.n:
            raise DimensionError(f"expected a vector of length {self.n}, got shape {x.shape}")
        return self.dense @ x

    def apply_batch(self, E, plan: MultiplyPlan | None = None) -> np.ndarray:
        E = _pad_matrix(E, self.n, self.n)
        return multiply_blocked(self.dense, E, plan or MultiplyPlan("naive"))


def sample_signs_matrix(m: int, n: int, seed: int, tag: str = "G") -> DenseSignMatrix:
    if m < 1 or n < 1:
        raise PlanningError("matrix dimensions must be positive")
    return DenseSignMatrix(_rng.signs(_rng.stream(seed, tag), (m, n)))


def sample_dense_baseline(m: int, N: int, seed: int) -> DenseSignMatrix:
    """Achlioptas-style dense +-1/sqrt(m) matrix acting on all N coordinates."""
    return sample_signs_matrix(m, N, seed, tag="G")


@dataclass(frozen=True, eq=False)
class HadamardStage:
    """``(1/sqrt(n)) R H D_xi`` on zero-padded inputs of length ``N_input``."""

    N_input: int
    xi: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        if self.xi.shape != (self.N_pad,):
            raise DimensionError(f"xi must have length N_pad={self.N_pad}")
        if self.rows.ndim != 1 or self.rows.size < 1:
            raise DimensionError("rows must be a nonempty vector")
        if self.rows.min() < 0 or self.rows.max() >= self.N_pad:
            raise DimensionError("row index out of range")

    @property
    def N_pad(self) -> int:
        return next_power_of_two(self.N_input)

    @property
    def n(self) -> int:
        return self.rows.size

    @property
    def m(self) -> int:
        return self.n

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.n)

    @cached_property
    def schedule(self) -> TrimSchedule:
        return TrimSchedule(self.N_pad, self.rows)

    def apply(self, x) -> np.ndarray:
        y = _pad_vector(x, self.N_input, self.N_pad) * self.xi
        return self.scale * fwht_trimmed(y, self.rows, self.schedule)

    def apply_batch(self, E) -> np.ndarray:
        M1 = self.xi[:, None] * _pad_matrix(E, self.N_input, self.N_pad)
        return self.scale * fwht_trimmed(M1, self.rows, self.schedule)

    def matrix(self, with_signs: bool = False) -> np.ndarray:
        """Dense ``(1/sqrt(n)) R H`` (times ``D_xi`` if requested), cropped to ``N_input`` columns."""
        i = self.rows[:, None]
        j = np.arange(self.N_input)[None, :]
        parity = np.bitwise_count(i & j) & 1
        M = self.scale * (1.0 - 2.0 * parity)
        if with_signs:
            M = M * self.xi[None, : self.N_input]
        return M


def sample_hadamard_stage(n: int, N: int, seed: int) -> HadamardStage:
    """Independent ``xi`` and ``rows`` streams derived from ``seed``."""
    N_pad = next_power_of_two(N)
    if not 1 <= n <= N_pad:
        raise PlanningError(f"need 1 <= n <= N_pad={N_pad}, got n={n}")
    xi = _rng.signs(_rng.stream(seed, "xi"), N_pad)
    rows = _rng.stream(seed, "rows").integers(0, N_pad, size=n, dtype=np.int64)
    return HadamardStage(N, xi, rows)


@dataclass(frozen=True, eq=False)
class ComposedTransform:
    """``G (1/sqrt(n)) R H D_xi`` mapping ``R^N_input`` to ``R^m``."""

    plan: DimensionPlan
    seed: int
    stage: HadamardStage
    G: DenseSignMatrix

    def __post_init__(self):
        if self.G.n != self.stage.n:
            raise DimensionError(f"G has {self.G.n} columns but the stage emits {self.stage.n} rows")

    @property
    def N_input(self) -> int:
        return self.stage.N_input

    @property
    def N_pad(self) -> int:
        return self.stage.N_pad

    @property
    def xi(self) -> np.ndarray:
        return self.stage.xi

    @property
    def rows(self) -> np.ndarray:
        return self.stage.rows

    @property
    def m(self) -> int:
        return self.G.m

    @property
    def n(self) -> int:
        return self.stage.n

    @property
    def stage_scale(self) -> float:
        return self.stage.scale

    def apply(self, x) -> np.ndarray:
        return apply_composed(self, x)

    def apply_batch(self, E, plan: MultiplyPlan | None = None, timings: dict | None = None) -> np.ndarray:
        return apply_composed_batch(self, E, plan, timings)


def sample_composed(plan: DimensionPlan, seed: int) -> ComposedTransform:
    """Draw ``xi``, ``rows`` and ``G`` from three independent streams of ``seed``.

    Same seed and plan give a bit-identical transform.
    """
    if not isinstance(plan, DimensionPlan):
        raise PlanningError("sample_composed needs a DimensionPlan")
    stage = sample_hadamard_stage(plan.n, plan.N, seed)
    G = sample_signs_matrix(plan.m, plan.n, seed, tag="G")
    return ComposedTransform(plan, int(seed), stage, G)


def apply_composed(T: ComposedTransform, x) -> np.ndarray:
    """Single-point path: sign flip, trimmed FWHT, then a plain ``G @ y``."""
    y2 = T.stage.apply(x)
    return T.G.dense @ y2


def apply_composed_batch(T: ComposedTransform, E, plan: MultiplyPlan | None = None,
                         timings: dict | None = None) -> np.ndarray:
    """Embed every column of ``E`` at once.

    ``M1 = D_xi E``, ``M2 = (1/sqrt(n)) R H M1`` with the trimmed FWHT run on
    all columns together, then ``M3 = G M2`` through :func:`multiply_blocked`.
    Wall times of the three stages are written to ``timings`` (nanoseconds)
    when a dict is passed.
    """
    plan = plan or MultiplyPlan()
    t0 = time.perf_counter_ns()
    M1 = T.xi[:, None] * _pad_matrix(E, T.N_input, T.N_pad)
    t1 = time.perf_counter_ns()
    M2 = T.stage_scale * fwht_trimmed(M1, T.rows, T.stage.schedule)
    t2 = time.perf_counter_ns()
    M3 = multiply_blocked(T.G.dense, M2, plan)
    t3 = time.perf_counter_ns()
    if timings is not None:
        timings["M1"] = t1 - t0
        timings["M2"] = t2 - t1
        timings["M3"] = t3 - t2
    return M3


def route_batch(plan: DimensionPlan) -> str:
    """``per_point`` when ``m <= sqrt(N_pad)`` (inclusive), else ``blocked_fast``."""
    return "per_point" if plan.m * plan.m <= plan.N_pad else "blocked_fast"


def embed(T: ComposedTransform, E, strategy: str = "auto", cutoff: int = DEFAULT_CUTOFF,
          threads: int = 1, timings: dict | None = None) -> np.ndarray:
    """Apply ``T`` to the columns of ``E`` using the requested route."""
    if strategy not in ROUTES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {ROUTES}")
    if strategy == "auto":
        strategy = route_batch(T.plan)
    if strategy == "per_point":
        E = np.asarray(E, dtype=np.float64)
        if E.ndim == 1:
            E = E[:, None]
        if E.ndim != 2 or E.shape[0] != T.N_input:
            raise DimensionError(f"expected a matrix with {T.N_input} rows, got shape {E.shape}")
        t0 = time.perf_counter_ns()
        out = np.empty((T.m, E.shape[1]))
        for j in range(E.shape[1]):
            out[:, j] = apply_composed(T, E[:, j])
        if timings is not None:
            timings["per_point"] = time.perf_counter_ns() - t0
        return out
    plan = MultiplyPlan(strategy, cutoff, None, threads)
    return apply_composed_batch(T, E, plan, timings)


def fjlt_density(p: int, N: int, c_q: float = DEFAULT_CQ) -> float:
    """``q = min(c_q (ln p)^2 / N, 1)``."""
    if p < 2:
        raise PlanningError("FJLT density needs p >= 2 (ln p = 0 gives an empty projection)")
    if c_q <= 0:
        raise PlanningError("c_q must be positive")
    return min(c_q * math.log(p) ** 2 / N, 1.0)


@dataclass(frozen=True, eq=False)
class FjltTransform:
    """Sparse-Gaussian FJLT ``(1/sqrt(m)) P (1/sqrt(N_pad)) H D_xi``.

    ``P`` has independent entries ``b g`` with ``b ~ Bernoulli(q)`` and
    ``g ~ N(0, 1/q)``.
    """

    N_input: int
    xi: np.ndarray
    P: sp.csr_matrix
    q: float
    epsilon: float = float("nan")
    seed: int = 0

    @property
    def N_pad(self) -> int:
        return next_power_of_two(self.N_input)

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @property
    def P_entries(self) -> list[tuple[int, int, float]]:
        coo = self.P.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def _finish(self, Z):
        return (self.P @ Z) / math.sqrt(self.m)

    def apply(self, x) -> np.ndarray:
        z = fwht_full(_pad_vector(x, self.N_input, self.N_pad) * self.xi) / math.sqrt(self.N_pad)
        return self._finish(z)

    def apply_batch(self, E) -> np.ndarray:
        Z = fwht_full(self.xi[:, None] * _pad_matrix(E, self.N_input, self.N_pad))
        return self._finish(Z / math.sqrt(self.N_pad))


def sample_fjlt(p: int, epsilon: float, N: int, m: int, c_q: float = DEFAULT_CQ,
                seed: int = 0) -> FjltTransform:
    N_pad = next_power_of_two(N)
    if not 1 <= m <= N_pad:
        raise PlanningError(f"need 1 <= m <= N_pad={N_pad}, got m={m}")
    q = fjlt_density(p, N, c_q)
    xi = _rng.signs(_rng.stream(seed, "xi"), N_pad)
    g = _rng.stream(seed, "P")
    total = m * N_pad
    nnz = int(g.binomial(total, q))
    flat = np.sort(g.choice(total, size=nnz, replace=False))
    vals = g.normal(0.0, math.sqrt(1.0 / q), size=nnz)
    P = sp.csr_matrix((vals, (flat // N_pad, flat % N_pad)), shape=(m, N_pad))
    return FjltTransform(N, xi, P, q, epsilon, int(seed))


def apply_fjlt(T: FjltTransform, x) -> np.ndarray:
    return T.apply(x)


@dataclass(frozen=True)
class IdentityTransform:
    """The identity on ``R^N``; reference point for the verification suite."""

    N_input: int
    m: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "m", self.N_input)

    def apply(self, x) -> np.ndarray:
        return _pad_vector(x, self.N_input, self.N_input).copy()

    def apply_batch(self, E) -> np.ndarray:
        return _pad_matrix(E, self.N_input, self.N_input).copy()
