import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from modlp.core import (
    RealLinear,
    approximation_numbers,
    loewner_gap,
    loewner_sweep,
    lp_from_values,
    lp_quasinorm,
    nuclear_to_lq_constant,
    operator_power,
    pnuclear_sandwich,
    quasinorm_constant,
    real_lp_quasinorm,
    split_real_linear,
)
from modlp.errors import NotPositiveError, ParameterError, ShapeError

seeds = st.integers(0, 2**32 - 1)


def cmat(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def test_approximation_numbers_diagonal():
    a = approximation_numbers(np.diag([3.0, 1.0, 0.5, 0.0]))
    assert np.allclose(a, [3, 1, 0.5, 0])
    assert np.allclose(approximation_numbers(np.eye(2)), [1, 1])


def test_approximation_numbers_eckart_young_oracle():
    rng = np.random.default_rng(1)
    X = cmat(rng, 5)
    a = approximation_numbers(X)
    U, s, Vh = np.linalg.svd(X)
    for n in range(5):
        Xn = (U[:, :n] * s[:n]) @ Vh[:n]
        assert abs(a[n] - np.linalg.norm(X - Xn, 2)) < 1e-10
    # independent route: eigenvalues of X^* X
    ev = np.sort(np.linalg.eigvalsh(X.conj().T @ X))[::-1]
    assert np.allclose(a, np.sqrt(np.clip(ev, 0, None)), atol=1e-10)


def test_lp_trivial_values():
    assert lp_quasinorm(np.diag([1, 0.5, 0.25]), 1) == pytest.approx(1.75)
    assert lp_quasinorm(np.eye(3), 2) == pytest.approx(np.sqrt(3))
    assert lp_from_values([], 1) == 0.0
    assert lp_from_values([2.0, 1.0], np.inf) == 2.0


def test_lp_rejects_bad_input():
    with pytest.raises(ParameterError):
        lp_quasinorm(np.eye(2), 0)
    with pytest.raises(ShapeError):
        lp_quasinorm(np.ones(3), 1)
    with pytest.raises(ShapeError):
        lp_quasinorm(np.array([[np.nan]]), 1)


def test_quasinorm_constant_values():
    assert quasinorm_constant(2) == 2.0
    assert quasinorm_constant(1) == 2.0
    assert quasinorm_constant(0.5) == 8.0


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]))
def test_quasinorm_triangle(seed, p):
    rng = np.random.default_rng(seed)
    X1, X2 = cmat(rng, 6), cmat(rng, 6) * rng.uniform(0.01, 10)
    lhs = lp_quasinorm(X1 + X2, p)
    rhs = quasinorm_constant(p) * (lp_quasinorm(X1, p) + lp_quasinorm(X2, p))
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_lp_unitary_invariance_and_monotone_in_p(seed):
    rng = np.random.default_rng(seed)
    X = cmat(rng, 4, 3)
    U = sla.qr(cmat(rng, 4))[0]
    W = sla.qr(cmat(rng, 3))[0]
    for p in (0.5, 1, 2):
        assert lp_quasinorm(U @ X @ W, p) == pytest.approx(lp_quasinorm(X, p), rel=1e-10)
    vals = [lp_quasinorm(X, p) for p in (0.5, 1, 2, np.inf)]
    assert all(a >= b * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


def test_real_lp_of_conjugation_and_i():
    assert real_lp_quasinorm(np.diag([1.0, -1.0]), 1) == pytest.approx(2)
    assert real_lp_quasinorm(np.array([[0.0, -1.0], [1.0, 0.0]]), 1) == pytest.approx(2)
    assert real_lp_quasinorm(RealLinear.antilinear(np.eye(1)), 1) == pytest.approx(2)


def test_real_lp_rejects_complex_matrix():
    with pytest.raises(ShapeError):
        real_lp_quasinorm(np.eye(2) * 1j, 1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]))
def test_real_lp_of_complex_linear(seed, p):
    rng = np.random.default_rng(seed)
    Y = cmat(rng, 3)
    r = real_lp_quasinorm(RealLinear.linear(Y), p)
    c = lp_quasinorm(Y, p)
    assert r <= 2 ** (1 / p) * c * (1 + 1e-12)
    # each complex singular value appears twice in the realification
    assert r == pytest.approx(2 ** (1 / p) * c, rel=1e-10)


def test_split_parts():
    rng = np.random.default_rng(3)
    Z = cmat(rng, 3)
    lin, anti = split_real_linear(RealLinear.linear(Z).real_matrix())
    assert np.allclose(lin, Z) and np.abs(anti).max() < 1e-14
    lin, anti = split_real_linear(RealLinear.antilinear(np.eye(3)).real_matrix())
    assert np.abs(lin).max() < 1e-14 and np.allclose(anti, np.eye(3))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_real_linear_roundtrip(seed):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(6, 6))
    Y = RealLinear.from_real(R)
    assert np.abs(Y.real_matrix() - R).max() < 1e-12
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = R @ np.concatenate([v.real, v.imag])
    assert np.allclose(Y(v), w[:3] + 1j * w[3:], atol=1e-12)
    # triangle inequality on the linear/antilinear split
    for p in (0.5, 1):
        k = quasinorm_constant(p)
        parts = real_lp_quasinorm(RealLinear.linear(Y.lin), p) + real_lp_quasinorm(RealLinear.antilinear(Y.anti), p)
        assert real_lp_quasinorm(Y, p) <= k * parts * (1 + 1e-12)


def test_real_linear_composition_matches_real_matrices():
    rng = np.random.default_rng(4)
    A = RealLinear(cmat(rng, 3), cmat(rng, 3))
    B = RealLinear(cmat(rng, 3), cmat(rng, 3))
    assert np.allclose((A @ B).real_matrix(), A.real_matrix() @ B.real_matrix())


def test_operator_power_values():
    assert np.allclose(operator_power(np.diag([4.0, 1.0, 0.0]), 0.5), np.diag([2, 1, 0]))
    assert np.allclose(operator_power(np.diag([4.0, 0.0]), -1), np.diag([0.25, 0]))


def test_operator_power_oracle():
    rng = np.random.default_rng(5)
    G = cmat(rng, 5)
    A = G @ G.conj().T + 0.1 * np.eye(5)
    B = operator_power(A, 1 / 3)
    assert np.abs(B @ B @ B - A).max() < 1e-9 * np.abs(A).max()
    assert np.allclose(B, sla.fractional_matrix_power(A, 1 / 3), atol=1e-9)


def test_operator_power_rejects_negative():
    with pytest.raises(NotPositiveError):
        operator_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(NotPositiveError):
        operator_power(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.5)


def test_loewner_explicit_pair():
    A, B = np.eye(2), np.array([[2.0, 1.0], [1.0, 2.0]])
    gap = loewner_gap(np.sqrt, A, B)
    assert gap == pytest.approx(0.0, abs=1e-12)
    D = sla.sqrtm(B) - np.eye(2)
    assert np.allclose(np.sort(np.linalg.eigvalsh(D)), [0, np.sqrt(3) - 1])
    assert loewner_gap(np.exp, B, B) == pytest.approx(0.0, abs=1e-12)


def test_loewner_checker_finds_square_violation():
    rng = np.random.default_rng(6)
    assert loewner_sweep(np.square, rng, 1000)["violations"] >= 1
    assert loewner_sweep(np.sqrt, rng, 300)["violations"] == 0


def test_loewner_rejects_unordered():
    with pytest.raises(NotPositiveError):
        loewner_gap(np.sqrt, np.eye(2) * 2, np.eye(2))


def test_nuclear_rank_one_and_p1():
    X = np.diag([1.0, 0, 0])
    sw = pnuclear_sandwich(X, 0.5, 2)
    assert sw.lp == pytest.approx(1) and sw.lq == pytest.approx(1)
    assert sw.nuclear_upper == pytest.approx(2 ** (2 + 3 / 0.5))
    assert nuclear_to_lq_constant(1, np.inf) == 1.0
    sw1 = pnuclear_sandwich(np.diag([0.7, 0.2]), 1, np.inf)
    assert sw1.lq == pytest.approx(0.7) and sw1.consistent
    with pytest.raises(ParameterError):
        nuclear_to_lq_constant(0.5, 0.9)


def test_nuclear_geometric_chain():
    r, p, q = 0.3, 0.5, 2.0
    s = r ** np.arange(12)
    sw = pnuclear_sandwich(np.diag(s), p, q)
    # closed-form geometric sums
    K = s.size
    assert sw.lp == pytest.approx(((1 - r ** (p * K)) / (1 - r ** p)) ** (1 / p), rel=1e-12)
    assert sw.lq == pytest.approx(((1 - r ** (q * K)) / (1 - r ** q)) ** (1 / q), rel=1e-12)
    assert sw.consistent and sw.lq <= sw.lp
