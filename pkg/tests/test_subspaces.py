import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modlp.core import RealLinear, lp_quasinorm
from modlp.errors import DegenerateSubspaceError, NotStandardError, ParameterError
from modlp.subspaces import (
    Conjugation,
    StandardSubspace,
    commuting_pair,
    construct_conjugation,
    gamma_split_subspace,
    random_conjugation,
    strict_norm_check,
    tgamma_norm_check,
    tomita_data,
    tomita_residuals,
)

seeds = st.integers(0, 2**32 - 1)


def random_subspace(rng, n, k=None):
    k = n if k is None else k
    return StandardSubspace.from_vectors(rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k)))


def test_real_points_are_trivial():
    H = StandardSubspace.from_vectors(np.eye(3))
    td = tomita_data(H, require_standard=True)
    assert np.allclose(td.Delta, np.eye(3))
    assert np.allclose(td.J.anti, np.eye(3)) and np.abs(td.J.lin).max() == 0
    gamma = construct_conjugation(H)
    assert np.allclose(gamma.C, np.eye(3))


def test_one_dimensional_line():
    z = np.exp(0.7j)
    td = tomita_data(StandardSubspace.from_vectors(np.array([[z]])))
    assert np.allclose(td.Delta, [[1.0]])
    # S is antiunitary: |S v| = |v|
    v = np.array([0.3 - 1.2j])
    assert abs(np.linalg.norm(td.S(v)) - np.linalg.norm(v)) < 1e-12


def test_tomita_operator_on_sampled_grid():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = StandardSubspace.from_vectors(V)
    td = tomita_data(H, require_standard=True)
    for a, b in rng.normal(size=(25, 2, 2)):
        h1, h2 = V @ a, V @ b
        assert np.abs(td.S(h1 + 1j * h2) - (h1 - 1j * h2)).max() < 1e-10
    JDJ = td.J.anti @ np.conj(td.Delta) @ np.conj(td.J.anti)
    assert np.abs(JDJ @ td.Delta - np.eye(2)).max() < 1e-9


def test_nonstandard_subspaces_flagged():
    H = StandardSubspace.from_vectors(np.array([[1.0, 1j]]))  # all of C
    td = tomita_data(H)
    assert td.cyclic and not td.separating
    with pytest.raises(NotStandardError):
        tomita_data(H, require_standard=True)
    small = StandardSubspace.from_vectors(np.array([[1.0], [0.0]]))
    assert not tomita_data(small).cyclic


def test_dependent_vectors_rejected():
    with pytest.raises(DegenerateSubspaceError):
        StandardSubspace.from_vectors(np.array([[1.0, 2.0], [1.0, 2.0]]))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_tomita_residuals_random(seed):
    rng = np.random.default_rng(seed)
    H = random_subspace(rng, 3)
    td = tomita_data(H)
    res = tomita_residuals(H, td)
    assert max(res.values()) < 1e-8
    w = np.sort(np.linalg.eigvalsh(td.Delta))
    assert w.min() > 0
    # spectrum of Delta is invariant under inversion
    assert np.allclose(w, np.sort(1 / w), rtol=1e-8)


def test_conjugation_postconditions_generic():
    rng = np.random.default_rng(1)
    H = random_subspace(rng, 2)
    gamma = construct_conjugation(H)
    assert max(gamma.report.values()) < 1e-9
    assert gamma.involution_residual() < 1e-12 and gamma.unitarity_residual() < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_conjugation_split_roundtrip(seed):
    rng = np.random.default_rng(seed)
    H = random_subspace(rng, 3)
    gamma = construct_conjugation(H)
    split = gamma_split_subspace(H, gamma)
    assert split.residual < 1e-9
    # Gamma_+ K_+ + Gamma_- K_- re-spans H
    Y = gamma.plus() @ RealLinear.linear(split.E_plus) + gamma.minus() @ RealLinear.linear(split.E_minus)
    assert H.image(Y).same_as(H, tol=1e-8)


def test_split_of_real_and_imaginary_points():
    n = 3
    gamma = Conjugation.standard(n)
    sp = gamma_split_subspace(StandardSubspace.from_vectors(np.eye(n)), gamma)
    assert sp.K_plus.shape[1] == n and sp.K_minus.shape[1] == 0
    sp = gamma_split_subspace(StandardSubspace.from_vectors(1j * np.eye(n)), gamma)
    assert sp.K_plus.shape[1] == 0 and sp.K_minus.shape[1] == n


def test_split_rejects_non_invariant():
    rng = np.random.default_rng(2)
    H = random_subspace(rng, 2)
    with pytest.raises(ParameterError):
        gamma_split_subspace(H, Conjugation.standard(2))


def test_tgamma_trivial_cases():
    gamma = Conjugation.standard(2)
    chk = tgamma_norm_check(gamma, 2 * np.eye(2), np.eye(2))
    assert chk.norm_T == pytest.approx(2.0)
    T = np.diag([0.5, 3.0])
    Y = gamma.plus() @ RealLinear.linear(T) + gamma.minus() @ RealLinear.linear(T)
    assert np.allclose(Y.lin, T) and np.abs(Y.anti).max() < 1e-15


def test_tgamma_random_real_diagonal():
    rng = np.random.default_rng(3)
    gamma = Conjugation.standard(4)
    chk = tgamma_norm_check(gamma, np.diag(rng.normal(size=4)), np.diag(rng.normal(size=4)), p=1)
    assert chk.norm_residual < 1e-12
    assert chk.lp_upper_holds and chk.lp_lower_holds


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]))
def test_tgamma_random_conjugation(seed, p):
    rng = np.random.default_rng(seed)
    gamma = random_conjugation(rng, 3)
    Tp, Tm = commuting_pair(rng, gamma), commuting_pair(rng, gamma)
    chk = tgamma_norm_check(gamma, Tp, Tm, p=p)
    assert chk.norm_residual < 1e-10 * max(1.0, chk.norm_T)
    assert chk.lp_upper_holds and chk.lp_lower_holds
    assert chk.lp_plus == pytest.approx(lp_quasinorm(Tp, p))


def test_tgamma_rejects_noncommuting():
    with pytest.raises(ParameterError):
        tgamma_norm_check(Conjugation.standard(2), 1j * np.eye(2), np.eye(2))


def test_strict_norm_below_one():
    rng = np.random.default_rng(4)
    H = random_subspace(rng, 3)
    sub = StandardSubspace.from_real_basis(H.basis[:, :2])
    chk = strict_norm_check(H, sub, 0.25)
    assert chk.holds and chk.norm <= 1 + 1e-9
    with pytest.raises(ParameterError):
        strict_norm_check(H, sub, 0.5)
