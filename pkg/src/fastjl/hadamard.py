"""Fast Walsh-Hadamard transforms in Sylvester order.

``H`` is never materialized. Entry ``(i, j)`` of the unnormalized Sylvester
matrix of order ``N = 2**K`` is ``(-1) ** popcount(i & j)``, so the top bit of
a row index selects between ``H_{N/2} (x1 + x2)`` and ``H_{N/2} (x1 - x2)``.

Both transforms below walk the same top-bit-first butterfly. The full
transform keeps every node of the recursion tree; the trimmed transform keeps
only the nodes that lie on a path to a requested row. Because every surviving
node is produced by the same sequence of additions in both cases, the trimmed
output is bit-identical to the corresponding rows of the full output.

All functions accept a vector of length ``N`` or a matrix with ``N`` rows, in
which case every column is transformed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

#: Constant in the cost bound ``ops <= COST_CONSTANT * N * (log2(d) + 1)``,
#: ``d`` the number of distinct requested rows. Levels above depth
#: ``floor(log2 d)`` cost at most ``N`` each; the remaining levels form a
#: geometric series bounded by ``2N``, so the total is at most
#: ``N (log2 d + 2) <= 2 N (log2 d + 1)``.
COST_CONSTANT = 2

COLUMN_CHUNK = 512


@dataclass(frozen=True)
class HadamardDim:
    n_log2: int

    def __post_init__(self):
        if self.n_log2 < 0:
            raise DimensionError(f"n_log2 must be nonnegative, got {self.n_log2}")

    @property
    def N(self) -> int:
        return 1 << self.n_log2

    @classmethod
    def of_length(cls, N: int) -> "HadamardDim":
        return cls(log2_exact(N))


def is_power_of_two(N: int) -> bool:
    return N >= 1 and (N & (N - 1)) == 0


def next_power_of_two(N: int) -> int:
    if N < 1:
        raise DimensionError(f"dimension must be positive, got {N}")
    return 1 << (N - 1).bit_length()


def log2_exact(N: int) -> int:
    if not is_power_of_two(N):
        raise DimensionError(f"length {N} is not a power of two")
    return N.bit_length() - 1


def _as_rows(rows, N: int) -> np.ndarray:
    idx = np.asarray(rows, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise DimensionError("row sample must contain at least one index")
    if idx.min() < 0 or idx.max() >= N:
        raise DimensionError(f"row index out of range [0, {N})")
    return idx


def fwht_full(x) -> np.ndarray:
    """Return ``H @ x`` for the unnormalized Sylvester Hadamard matrix."""
    x = np.asarray(x)
    if x.ndim not in (1, 2):
        raise DimensionError("expected a vector or a matrix")
    N = x.shape[0]
    K = log2_exact(N)
    tail = x.shape[1:]
    dtype = np.result_type(x.dtype, np.float64) if x.dtype.kind != "i" else x.dtype
    y = x.astype(dtype, copy=True).reshape((1, N) + tail)
    for _ in range(K):
        # node 2*i + bit at the next depth; bit 0 -> sum, bit 1 -> difference
        y = _butterfly(y, y.shape[1] // 2, tail)
    return y.reshape((N,) + tail)


class TrimSchedule:
    """Pruned recursion tree for one ``(N, rows)`` pair.

    Building it costs a few ``np.unique`` calls per level; reusing it across
    many inputs (as a sampled transform does) skips that work.
    """

    def __init__(self, N: int, rows):
        self.N = N
        K = log2_exact(N)
        self.rows = _as_rows(rows, N)
        self.levels = []
        parents = np.zeros(1, dtype=np.int64)
        for depth in range(1, K + 1):
            children = np.unique(self.rows >> (K - depth))
            if children.size == 2 * parents.size:
                self.levels.append(None)
            else:
                pos = np.searchsorted(parents, children >> 1)
                low = (children & 1) == 0
                self.levels.append((children.size, np.flatnonzero(low), pos[low],
                                    np.flatnonzero(~low), pos[~low]))
            parents = children
        self.leaf_pos = np.searchsorted(parents, self.rows)


def _butterfly(y, half, tail):
    a = y[:, :half]
    b = y[:, half:]
    out = np.empty((y.shape[0], 2, half) + tail, dtype=y.dtype)
    np.add(a, b, out=out[:, 0])
    np.subtract(a, b, out=out[:, 1])
    return out.reshape((-1, half) + tail)


def _trimmed(x: np.ndarray, sched: TrimSchedule, ops: list | None = None) -> np.ndarray:
    tail = x.shape[1:]
    y = x.reshape((1, sched.N) + tail)
    for level in sched.levels:
        half = y.shape[1] // 2
        if level is None:
            # no pruning at this level: plain butterfly, no gathers
            y = _butterfly(y, half, tail)
        else:
            size, lo_out, lo_src, hi_out, hi_src = level
            nxt = np.empty((size, half) + tail, dtype=y.dtype)
            nxt[lo_out] = y[lo_src, :half] + y[lo_src, half:]
            nxt[hi_out] = y[hi_src, :half] - y[hi_src, half:]
            y = nxt
        if ops is not None:
            # every stored entry of this level is one addition or subtraction
            ops[0] += y.size
    return y[sched.leaf_pos, 0]


def fwht_trimmed(x, rows, schedule: TrimSchedule | None = None) -> np.ndarray:
    """Return ``(H @ x)[rows]`` without computing the other rows.

    ``rows`` may contain duplicates; each occurrence gets its own output entry.
    Branches of the half-split recursion that lead to no requested row are
    pruned, giving ``O(N log n)`` arithmetic for ``n`` requested rows. Pass a
    prebuilt ``schedule`` to reuse the pruning pattern for the same rows.
    """
    x = np.asarray(x)
    if x.ndim not in (1, 2):
        raise DimensionError("expected a vector or a matrix")
    N = x.shape[0]
    log2_exact(N)
    if schedule is None:
        schedule = TrimSchedule(N, rows)
    elif schedule.N != N:
        raise DimensionError(f"schedule built for N={schedule.N}, input has length {N}")
    if x.dtype.kind != "i":
        x = x.astype(np.result_type(x.dtype, np.float64), copy=False)
    if x.ndim == 1 or x.shape[1] <= COLUMN_CHUNK:
        return _trimmed(x, schedule)
    # column blocks keep each level's working set small; results are unchanged
    out = np.empty((schedule.rows.size, x.shape[1]), dtype=x.dtype)
    for j in range(0, x.shape[1], COLUMN_CHUNK):
        out[:, j:j + COLUMN_CHUNK] = _trimmed(np.ascontiguousarray(x[:, j:j + COLUMN_CHUNK]), schedule)
    return out


def fwht_trimmed_counted(x, rows) -> tuple[np.ndarray, int]:
    """:func:`fwht_trimmed` plus the number of additions/subtractions it executed."""
    x = np.asarray(x)
    sched = TrimSchedule(x.shape[0], rows)
    if x.dtype.kind != "i":
        x = x.astype(np.result_type(x.dtype, np.float64), copy=False)
    ops = [0]
    out = _trimmed(x, sched, ops)
    return out, ops[0]


def fwht_op_count(N: int, rows) -> int:
    """Number of additions/subtractions :func:`fwht_trimmed` performs on a length-N vector.

    Computed from the pruned tree: level ``d`` keeps one node per distinct
    ``d``-bit prefix of the requested rows, each costing ``N / 2**d``.
    """
    K = log2_exact(N)
    idx = _as_rows(rows, N)
    total = 0
    for depth in range(1, K + 1):
        total += np.unique(idx >> (K - depth)).size * (N >> depth)
    return int(total)


def trimmed_cost_bound(N: int, rows) -> float:
    """Right-hand side of the documented cost bound for this ``(N, rows)`` pair."""
    d = np.unique(_as_rows(rows, N)).size
    return COST_CONSTANT * N * (np.log2(d) + 1)


def hadamard_matrix(N: int) -> np.ndarray:
    """Dense Sylvester matrix built from Kronecker powers. For tests and toy checks only."""
    K = log2_exact(N)
    H = np.ones((1, 1), dtype=np.int64)
    h2 = np.array([[1, 1], [1, -1]], dtype=np.int64)
    for _ in range(K):
        H = np.kron(h2, H)
    return H
