import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tblmi.fourier import PeriodicMatrix
from tblmi.toeplitz import (FlipIndexer, dump_csv, hankel_block, hankel_corrections,
                            mean_square_norm, minimal_eta, n_operator, operator_norm_estimate,
                            pi_m, product_phasors, tb_product_corrected, toeplitz_truncate,
                            trace_tb)

from _util import random_periodic

T = 1.0
W = 2 * np.pi


def scalar(ph, real=True):
    return PeriodicMatrix({k: [[v]] for k, v in ph.items()}, (1, 1), T, real=real)


E_PLUS = scalar({1: 1.0}, real=False)     # e^{jwt}
E_MINUS = scalar({-1: 1.0}, real=False)   # e^{-jwt}


# ---- T_m ----------------------------------------------------------------------

def test_constant_gives_scaled_identity():
    M = toeplitz_truncate(PeriodicMatrix.constant([[2.5]], T), 2).data
    np.testing.assert_array_equal(M, 2.5 * np.eye(5))


def test_one_plus_two_cos():
    M = toeplitz_truncate(scalar({0: 1.0, 1: 1.0}), 1).data
    np.testing.assert_array_equal(M.real, [[1, 1, 0], [1, 1, 1], [0, 1, 1]])


def test_single_exponential_entry_sits_on_subdiagonal():
    A = PeriodicMatrix({1: [[0, 1], [0, 0]]}, (2, 2), T, real=False)
    tb = toeplitz_truncate(A, 2)
    np.testing.assert_array_equal(tb.block(0, 1), np.eye(5, k=-1))
    for i, j in ((0, 0), (1, 0), (1, 1)):
        assert not np.any(tb.block(i, j))


def test_toeplitz_entries_follow_phasors(rng):
    A = random_periodic(rng, (2, 3), 3)
    m = 4
    tb = toeplitz_truncate(A, m)
    assert tb.data.shape == (2 * 9, 3 * 9)
    for i in range(2):
        for j in range(3):
            blk = tb.block(i, j)
            for r in range(-m, m + 1):
                for c in range(-m, m + 1):
                    expect = A.phasor(r - c)[i, j] if abs(r - c) <= 3 else 0
                    assert blk[r + m, c + m] == expect


def test_hermitian_for_real_symmetric(rng):
    A = random_periodic(rng, (3, 3), 4, symmetric=True)
    M = toeplitz_truncate(A, 6).data
    assert np.abs(M - M.conj().T).max() <= 1e-14


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        toeplitz_truncate(scalar({0: 1.0}), -1)


# ---- Hankel blocks --------------------------------------------------------------

def test_hankel_of_constant_is_zero():
    c = PeriodicMatrix.constant(np.ones((2, 2)), T)
    for sign in ("plus", "minus"):
        assert not np.any(hankel_block(c, 2, 3, sign).data)


def test_hankel_single_exponential():
    assert hankel_block(E_PLUS, 0, 0, "plus").data.tolist() == [[1]]
    assert not np.any(hankel_block(E_PLUS, 0, 0, "minus").data)


def test_hankel_entries(rng):
    A = random_periodic(rng, (2, 2), 5)
    p, q = 2, 1
    for sign, s in (("plus", 1), ("minus", -1)):
        H = hankel_block(A, p, q, sign)
        assert H.data.shape == (2 * 5, 2 * 3)
        for r in range(1, 2 * p + 2):
            for c in range(1, 2 * q + 2):
                k = s * (r + c - 1)
                expect = A.phasor(k) if abs(k) <= 5 else np.zeros((2, 2))
                for i in range(2):
                    for j in range(2):
                        assert H.block(i, j)[r - 1, c - 1] == expect[i, j]


def test_hankel_bad_sign():
    with pytest.raises(ValueError):
        hankel_block(E_PLUS, 1, 1, "up")


# ---- products ---------------------------------------------------------------------

def test_product_with_constant(rng):
    B = random_periodic(rng, (2, 2), 3)
    C = np.array([[1.0, 2.0], [0.0, -1.0]])
    P = product_phasors(PeriodicMatrix.constant(C, T), B)
    for k in range(-3, 4):
        np.testing.assert_allclose(P.phasor(k), C @ B.phasor(k), atol=1e-14)


def test_exponentials_cancel():
    C = product_phasors(E_PLUS, E_MINUS)
    assert C.orders() == [0]
    assert C.phasor(0)[0, 0] == 1


def test_cos_squared():
    c = scalar({1: 1.0})    # 2 cos wt
    C = product_phasors(c, c)
    assert C.phasor(0)[0, 0] == pytest.approx(2)
    assert C.phasor(2)[0, 0] == pytest.approx(1)
    assert C.phasor(-2)[0, 0] == pytest.approx(1)


def test_product_matches_pointwise(rng):
    A = random_periodic(rng, (2, 3), 4, real=False)
    B = random_periodic(rng, (3, 2), 2)
    t = np.linspace(0, 1, 23)
    np.testing.assert_allclose(product_phasors(A, B).evaluate(t),
                               A.evaluate(t) @ B.evaluate(t), atol=1e-12)


def test_product_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        product_phasors(random_periodic(rng, (2, 2), 1), random_periodic(rng, (3, 1), 1))


def test_hand_example_corrected_product():
    m = 2
    plain = toeplitz_truncate(E_PLUS, m).data @ toeplitz_truncate(E_MINUS, m).data
    np.testing.assert_array_equal(plain, np.diag([0, 1, 1, 1, 1]))
    upper, lower = hankel_corrections(E_PLUS, E_MINUS, m)
    assert upper[0, 0] == 1 and np.count_nonzero(upper) == 1
    assert not np.any(lower)
    np.testing.assert_array_equal(tb_product_corrected(E_PLUS, E_MINUS, m).data, np.eye(5))


def test_constant_factor_needs_no_correction(rng):
    A = random_periodic(rng, (2, 2), 3)
    C = PeriodicMatrix.constant(rng.standard_normal((2, 2)), T)
    for X, Y in ((A, C), (C, A)):
        up, lo = hankel_corrections(X, Y, 4)
        assert not np.any(up) and not np.any(lo)


def test_random_product_exactness(rng):
    A = random_periodic(rng, (2, 2), 3)
    B = random_periodic(rng, (2, 2), 3)
    got = tb_product_corrected(A, B, 6).data
    want = toeplitz_truncate(product_phasors(A, B), 6).data
    assert np.abs(got - want).max() <= 1e-12


def test_minimal_eta():
    assert minimal_eta(scalar({3: 1.0}), scalar({4: 1.0})) == 2
    assert minimal_eta(scalar({0: 1.0}), scalar({4: 1.0})) == 0
    assert minimal_eta(scalar({1: 1.0}), scalar({1: 1.0})) == 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), da=st.integers(0, 4),
       db=st.integers(0, 4), m=st.integers(0, 8), real=st.booleans())
def test_product_exactness_property(seed, n, da, db, m, real):
    rng = np.random.default_rng(seed)
    A = random_periodic(rng, (n, n), da, real=real)
    B = random_periodic(rng, (n, n), db, real=real)
    got = tb_product_corrected(A, B, m).data
    want = toeplitz_truncate(product_phasors(A, B), m).data
    assert np.abs(got - want).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), da=st.integers(1, 4), db=st.integers(1, 4),
       extra=st.integers(0, 4))
def test_corrections_have_disjoint_support(seed, da, db, extra):
    rng = np.random.default_rng(seed)
    m = max(da, db) + extra
    A = random_periodic(rng, (2, 2), da)
    B = random_periodic(rng, (2, 2), db)
    up, lo = hankel_corrections(A, B, m)
    assert not np.any(np.abs(up) * np.abs(lo))


def test_pi_m_plain_and_linear(rng):
    A = random_periodic(rng, (2, 2), 3)
    B = random_periodic(rng, (2, 2), 2)
    np.testing.assert_array_equal(pi_m(A, m=4), toeplitz_truncate(A, 4).data)
    np.testing.assert_allclose(pi_m(A + B, m=4), pi_m(A, m=4) + pi_m(B, m=4), atol=1e-15)


def test_pi_m_triple_product(rng):
    U = random_periodic(rng, (2, 2), 3)
    P = random_periodic(rng, (2, 2), 4, symmetric=True)
    V = random_periodic(rng, (2, 2), 2)
    got = pi_m(U, P, V, m=5)
    want = toeplitz_truncate(product_phasors(product_phasors(U, P), V), 5).data
    assert np.abs(got - want).max() <= 1e-12


def test_pi_m_identity_factors(rng):
    A = random_periodic(rng, (2, 2), 2)
    np.testing.assert_array_equal(pi_m(None, A, None, m=3), toeplitz_truncate(A, 3).data)
    with pytest.raises(ValueError):
        pi_m(None, m=2)


# ---- flip, N, trace, norms ----------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 3), m=st.integers(0, 5), seed=st.integers(0, 1000))
def test_flip_involution(n, m, seed):
    rng = np.random.default_rng(seed)
    size = n * (2 * m + 1)
    M = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    J = FlipIndexer(n, m)
    np.testing.assert_array_equal(J.left(J.left(M)), M)
    np.testing.assert_array_equal(J.right(J.right(M)), M)


def test_flip_reverses_within_blocks():
    J = FlipIndexer(2, 1)
    assert J.perm.tolist() == [2, 1, 0, 5, 4, 3]


def test_n_operator_examples():
    np.testing.assert_allclose(np.diag(n_operator(1, 1, W)), [-2j * np.pi, 0, 2j * np.pi])
    assert not np.any(n_operator(3, 0, W))
    N2 = n_operator(2, 1, W)
    np.testing.assert_array_equal(N2, np.kron(np.eye(2), n_operator(1, 1, W)))
    np.testing.assert_array_equal(N2.conj().T, -N2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), d=st.integers(0, 5),
       m=st.integers(0, 7))
def test_modulation_rule_is_exact(seed, n, d, m):
    # N*P + PN is the TB image of -P', with no Hankel terms
    rng = np.random.default_rng(seed)
    P = random_periodic(rng, (n, n), d, symmetric=True)
    N = n_operator(n, m, P.omega)
    TP = toeplitz_truncate(P, m).data
    lhs = N.conj().T @ TP + TP @ N
    rhs = toeplitz_truncate(-P.derivative(), m).data
    assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + np.abs(rhs).max())


def test_trace_examples():
    P = PeriodicMatrix({0: np.diag([2.0, 3.0]), 1: np.diag([0.5, 0.0])}, (2, 2), T,
                       symmetric=True)
    assert trace_tb(P) == 5.0
    M0 = np.array([[1.0, 4.0], [2.0, -7.0]])
    assert trace_tb(PeriodicMatrix.constant(M0, T)) == pytest.approx(-6.0)
    assert mean_square_norm(scalar({1: 1.0})) == pytest.approx(np.sqrt(2))


def test_trace_requires_square():
    with pytest.raises(ValueError):
        trace_tb(PeriodicMatrix.zeros((2, 1), T))


def test_operator_norm_examples():
    C = np.array([[1.0, 2.0], [0.0, 3.0]])
    assert operator_norm_estimate(PeriodicMatrix.constant(C, T)) == pytest.approx(
        np.linalg.norm(C, 2))
    assert operator_norm_estimate(scalar({1: 1.0})) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        operator_norm_estimate(scalar({1: 1.0}), grid_points=32)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), d=st.integers(0, 6))
def test_trace_norm_inequality(seed, n, d):
    rng = np.random.default_rng(seed)
    M = random_periodic(rng, (n, n), d, symmetric=True)
    assert mean_square_norm(M) <= n * operator_norm_estimate(M) + 1e-12


def test_dump_csv(tmp_path, rng):
    tb = toeplitz_truncate(scalar({0: 1.0, 1: 0.5j}), 1)
    path = tmp_path / "tb.csv"
    dump_csv(tb, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["row", "col", "re", "im"]
    got = {(int(r), int(c)): complex(float(a), float(b)) for r, c, a, b in rows[1:]}
    assert got == {(i, j): tb.data[i, j] for i, j in zip(*np.nonzero(tb.data))}
