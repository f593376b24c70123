"""Square-by-wide matrix products via block splitting and Strassen recursion.

``multiply_blocked`` computes ``G @ M2`` for a short, wide ``G`` (m x n) and a
tall ``M2`` (n x p) by cutting ``G`` into ``r = ceil(n/m)`` square m x m blocks
and ``M2`` into the matching m x p slabs. Each block product is a square times
wide product, handled by :func:`multiply_strassen`, and the ``r`` partial
results are summed in block order.

Strassen here stands in for the asymptotically faster rectangular algorithms
of the Lotti-Romani family, which are not practical. ``MultiplyPlan`` is the
place to plug in another square x rectangular kernel.

Only multiplications are counted by :func:`flop_estimate`; each leaf product of
sizes ``a x b`` times ``b x c`` contributes ``a*b*c``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .hadamard import next_power_of_two

DEFAULT_CUTOFF = 64
STRATEGIES = ("naive", "blocked_fast")


@dataclass(frozen=True)
class MultiplyPlan:
    """How :func:`multiply_blocked` should compute a product.

    ``block_rows`` is the side of the square blocks. ``None`` means the row
    count of ``G``, which is the only value the blocked path supports.
    """

    strategy: str = "blocked_fast"
    strassen_cutoff: int = DEFAULT_CUTOFF
    block_rows: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.strassen_cutoff < 8:
            raise ValueError("strassen_cutoff must be >= 8")
        if self.block_rows is not None and self.block_rows < 1:
            raise ValueError("block_rows must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


class MultiplyCounter:
    """Tallies multiplications actually executed by the leaf kernel."""

    def __init__(self):
        self.mults = 0

    def add(self, a: int, b: int, c: int, batch: int = 1):
        self.mults += batch * a * b * c


def _check_matrix(M, name):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a nonempty 2-D matrix, got shape {M.shape}")
    return M


def multiply_naive(A, B, counter: MultiplyCounter | None = None) -> np.ndarray:
    """Standard cubic product (BLAS-tiled), with shape checks."""
    A = _check_matrix(A, "A")
    B = _check_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if counter is not None:
        counter.add(A.shape[0], A.shape[1], B.shape[1])
    return A @ B


def _strassen(A, B, cutoff, counter):
    # A: (s, s); B: (nb, s, s) stack of right operands sharing A
    s = A.shape[0]
    if s <= cutoff:
        if counter is not None:
            counter.add(s, s, s, batch=B.shape[0])
        return np.matmul(A, B)
    h = s // 2
    A11, A12, A21, A22 = A[:h, :h], A[:h, h:], A[h:, :h], A[h:, h:]
    B11, B12 = B[:, :h, :h], B[:, :h, h:]
    B21, B22 = B[:, h:, :h], B[:, h:, h:]
    M1 = _strassen(A11 + A22, B11 + B22, cutoff, counter)
    M2 = _strassen(A21 + A22, B11, cutoff, counter)
    M3 = _strassen(A11, B12 - B22, cutoff, counter)
    M4 = _strassen(A22, B21 - B11, cutoff, counter)
    M5 = _strassen(A11 + A12, B22, cutoff, counter)
    M6 = _strassen(A21 - A11, B11 + B12, cutoff, counter)
    M7 = _strassen(A12 - A22, B21 + B22, cutoff, counter)
    C = np.empty_like(B)
    C[:, :h, :h] = M1 + M4 - M5 + M7
    C[:, :h, h:] = M3 + M5
    C[:, h:, :h] = M2 + M4
    C[:, h:, h:] = M1 - M2 + M3 + M6
    return C


def multiply_strassen(A, B, cutoff: int = DEFAULT_CUTOFF,
                      counter: MultiplyCounter | None = None) -> np.ndarray:
    """Product of a square ``A`` (m x m) and a wide ``B`` (m x k).

    ``B`` is cut into ``ceil(k/m)`` column blocks of width at most ``m``; every
    block and ``A`` are zero-padded to the next power of two ``s >= m`` and
    multiplied by Strassen recursion until the side drops to ``cutoff``.
    All blocks go through the recursion together as one stacked operand.
    """
    A = _check_matrix(A, "A")
    B = _check_matrix(B, "B")
    m = A.shape[0]
    if A.shape[1] != m:
        raise DimensionError(f"A must be square, got {A.shape}")
    if B.shape[0] != m:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    k = B.shape[1]
    nb = -(-k // m)
    s = next_power_of_two(m)
    Ap = np.zeros((s, s))
    Ap[:m, :m] = A
    Bp = np.zeros((nb, s, s))
    Bw = np.zeros((m, nb * m))
    Bw[:, :k] = B
    Bp[:, :m, :m] = Bw.reshape(m, nb, m).transpose(1, 0, 2)
    Cp = _strassen(Ap, Bp, cutoff, counter)
    C = Cp[:, :m, :m].transpose(1, 0, 2).reshape(m, nb * m)
    return np.ascontiguousarray(C[:, :k])


def multiply_blocked(G, M2, plan: MultiplyPlan | None = None,
                     counter: MultiplyCounter | None = None) -> np.ndarray:
    """``G @ M2`` by square block splitting, with the strategy chosen by ``plan``."""
    plan = plan or MultiplyPlan()
    G = _check_matrix(G, "G")
    M2 = _check_matrix(M2, "M2")
    m, n = G.shape
    if M2.shape[0] != n:
        raise DimensionError(f"cannot multiply {G.shape} by {M2.shape}")
    if plan.strategy == "naive":
        return multiply_naive(G, M2, counter)
    if plan.block_rows is not None and plan.block_rows != m:
        raise DimensionError(f"block_rows={plan.block_rows} must equal the row count of G ({m})")
    p = M2.shape[1]
    r = -(-n // m)
    if r * m != n:
        Gp = np.zeros((m, r * m))
        Gp[:, :n] = G
        Mp = np.zeros((r * m, p))
        Mp[:n] = M2
    else:
        Gp, Mp = G, M2

    def block(j):
        sl = slice(j * m, (j + 1) * m)
        return multiply_strassen(Gp[:, sl], Mp[sl], plan.strassen_cutoff, counter)

    if plan.threads > 1 and r > 1 and counter is None:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            parts = list(pool.map(block, range(r)))
    else:
        parts = [block(j) for j in range(r)]
    # fixed block order keeps the result reproducible regardless of scheduling
    out = parts[0].copy()
    for part in parts[1:]:
        out += part
    return out


def strassen_leaf_count(s: int, cutoff: int) -> int:
    """Multiplications for one s x s by s x s product (``s`` a power of two)."""
    count = 1
    while s > cutoff:
        s //= 2
        count *= 7
    return count * s ** 3


def flop_estimate(m: int, n: int, p: int, plan: MultiplyPlan | None = None) -> int:
    """Multiplications the planned product of an m x n and an n x p matrix executes.

    Counted from the recursion tree: ``M(s) = s**3`` at or below the cutoff and
    ``M(s) = 7 M(s/2)`` above it, times ``ceil(n/m)`` blocks of ``G`` and
    ``ceil(p/m)`` column blocks of ``M2``.
    """
    plan = plan or MultiplyPlan()
    if min(m, n, p) < 1:
        raise ValueError("dimensions must be positive")
    if plan.strategy == "naive":
        return m * n * p
    r = -(-n // m)
    nb = -(-p // m)
    return r * nb * strassen_leaf_count(next_power_of_two(m), plan.strassen_cutoff)
