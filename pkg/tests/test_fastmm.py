import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastjl.errors import DimensionError
from fastjl.fastmm import (
    DEFAULT_CUTOFF,
    MultiplyCounter,
    MultiplyPlan,
    flop_estimate,
    multiply_blocked,
    multiply_naive,
    multiply_strassen,
    strassen_leaf_count,
)


def dot_oracle(A, B):
    out = np.empty((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            out[i, j] = sum(A[i, k] * B[k, j] for k in range(A.shape[1]))
    return out


def rel_fro(X, Y):
    return np.linalg.norm(X - Y) / np.linalg.norm(Y)


def test_naive_identity_and_scalar():
    B = np.random.default_rng(0).standard_normal((4, 7))
    assert np.array_equal(multiply_naive(np.eye(4), B), B)
    assert multiply_naive([[2.0]], [[3.0]]).tolist() == [[6.0]]


def test_naive_against_dot_products():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((9, 5)), rng.standard_normal((5, 13))
    assert rel_fro(multiply_naive(A, B), dot_oracle(A, B)) < 1e-13


def test_naive_dimension_error():
    with pytest.raises(DimensionError):
        multiply_naive(np.ones((2, 3)), np.ones((2, 3)))


def test_strassen_identity_survives_padding():
    B = np.random.default_rng(2).standard_normal((64, 200))
    assert rel_fro(multiply_strassen(np.eye(64), B, cutoff=8), B) < 1e-12


def test_strassen_two_by_two():
    A = [[1.0, 2.0], [3.0, 4.0]]
    B = [[5.0, 6.0], [7.0, 8.0]]
    expected = multiply_naive(A, B)
    assert expected.tolist() == [[19, 22], [43, 50]]
    np.testing.assert_allclose(multiply_strassen(A, B, cutoff=1), expected, rtol=1e-15)


def test_strassen_against_naive_with_recursion():
    rng = np.random.default_rng(3)
    A, B = rng.standard_normal((128, 128)), rng.standard_normal((128, 1024))
    assert rel_fro(multiply_strassen(A, B, cutoff=32), multiply_naive(A, B)) < 1e-10


def test_strassen_shape_errors():
    with pytest.raises(DimensionError):
        multiply_strassen(np.ones((3, 4)), np.ones((4, 2)))
    with pytest.raises(DimensionError):
        multiply_strassen(np.ones((3, 3)), np.ones((4, 2)))


def test_blocked_selection_matrix():
    G = np.zeros((8, 20))
    G[:, :8] = np.eye(8)
    M2 = np.random.default_rng(4).standard_normal((20, 5))
    np.testing.assert_allclose(multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=8)), M2[:8], atol=1e-15)


def test_blocked_with_padding():
    rng = np.random.default_rng(5)
    G, M2 = rng.standard_normal((4, 10)), rng.standard_normal((10, 6))
    assert rel_fro(multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=8)), multiply_naive(G, M2)) < 1e-12


def test_blocked_large():
    rng = np.random.default_rng(6)
    G, M2 = rng.standard_normal((64, 640)), rng.standard_normal((640, 4096))
    assert rel_fro(multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=8)), multiply_naive(G, M2)) < 1e-9


def test_blocked_naive_strategy_and_errors():
    rng = np.random.default_rng(7)
    G, M2 = rng.standard_normal((3, 5)), rng.standard_normal((5, 2))
    assert np.array_equal(multiply_blocked(G, M2, MultiplyPlan("naive")), G @ M2)
    with pytest.raises(DimensionError):
        multiply_blocked(G, M2.T)
    with pytest.raises(DimensionError):
        multiply_blocked(G, M2, MultiplyPlan(block_rows=4))


def test_blocked_threads_bit_identical_to_serial():
    rng = np.random.default_rng(8)
    G, M2 = rng.standard_normal((32, 200)), rng.standard_normal((200, 300))
    serial = multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=8))
    threaded = multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=8, threads=4))
    assert np.array_equal(serial, threaded)


def test_plan_validation():
    with pytest.raises(ValueError):
        MultiplyPlan(strassen_cutoff=4)
    with pytest.raises(ValueError):
        MultiplyPlan(strategy="lotti-romani")
    with pytest.raises(ValueError):
        MultiplyPlan(block_rows=0)


def test_flop_estimate_examples():
    assert flop_estimate(10, 10, 10, MultiplyPlan("naive")) == 1000
    assert flop_estimate(64, 128, 64, MultiplyPlan(strassen_cutoff=64)) == 2 * 64 ** 3
    # one 128-block, one level of recursion: M(128) = 7 M(64) = 7 * 64^3
    assert flop_estimate(128, 128, 128, MultiplyPlan(strassen_cutoff=64)) == 1835008


@pytest.mark.parametrize("m,n,p,cutoff", [
    (64, 128, 64, 64), (128, 128, 128, 64), (100, 250, 333, 16), (17, 17, 1, 8), (256, 512, 1000, 32),
])
def test_flop_estimate_matches_instrumented_run(m, n, p, cutoff):
    rng = np.random.default_rng(m + n + p)
    plan = MultiplyPlan(strassen_cutoff=cutoff)
    counter = MultiplyCounter()
    multiply_blocked(rng.standard_normal((m, n)), rng.standard_normal((n, p)), plan, counter)
    assert counter.mults == flop_estimate(m, n, p, plan)


@pytest.mark.parametrize("a", [0, 1, 2, 3])
def test_strassen_count_closed_form(a):
    c = 8
    s = 2 ** a * c
    k = 3 * s + 1
    counter = MultiplyCounter()
    rng = np.random.default_rng(a)
    multiply_strassen(rng.standard_normal((s, s)), rng.standard_normal((s, k)), c, counter)
    assert counter.mults == 7 ** a * c ** 3 * -(-k // s)
    assert strassen_leaf_count(s, c) == 7 ** a * c ** 3


@pytest.mark.parametrize("a", [2, 3, 4])
def test_blocked_fewer_mults_than_naive_past_crossover(a):
    # aligned shapes with m = 2^a * cutoff >= 4 * cutoff at the shipped default cutoff
    m = 2 ** a * DEFAULT_CUTOFF
    plan = MultiplyPlan()
    for r, cols in [(1, 1), (3, 2), (5, 7)]:
        n, p = r * m, cols * m
        assert flop_estimate(m, n, p, plan) < flop_estimate(m, n, p, MultiplyPlan("naive"))


shapes = st.tuples(st.integers(1, 40), st.integers(1, 90), st.integers(1, 120), st.integers(8, 16))


@given(shapes, st.integers(0, 2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_blocked_equals_naive_property(shape, seed):
    m, n, p, cutoff = shape
    rng = np.random.default_rng(seed)
    G, M2 = rng.standard_normal((m, n)), rng.standard_normal((n, p))
    assert rel_fro(multiply_blocked(G, M2, MultiplyPlan(strassen_cutoff=cutoff)), G @ M2) < 1e-9


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 20), st.integers(0, 5), st.integers(0, 5),
       st.integers(0, 2 ** 32 - 1))
@settings(deadline=None)
def test_padding_neutrality(m, n, p, extra_rows, extra_cols, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-9, 9, size=(m, n)).astype(float)
    B = rng.integers(-9, 9, size=(n, p)).astype(float)
    Ap = np.zeros((m + extra_rows, n + extra_cols))
    Ap[:m, :n] = A
    Bp = np.zeros((n + extra_cols, p))
    Bp[:n] = B
    # integer-valued entries: both products are exact
    assert np.array_equal(multiply_naive(Ap, Bp)[:m], multiply_naive(A, B))
