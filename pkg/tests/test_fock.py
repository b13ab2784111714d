import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modlp import fock as F
from modlp import lattice as L
from modlp.errors import ParameterError, ShapeError
from modlp.subspaces import StandardSubspace

seeds = st.integers(0, 2**32 - 1)


def cmat(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_bose_dimension_and_ordering():
    fk = F.BoseFock(3, 4)
    assert fk.dim == math.comb(3 + 4, 3)
    assert fk.states[0] == (0, 0, 0) and fk.states[1] == (1, 0, 0)
    assert np.all(np.diff(fk.particle_number()) >= 0)
    with pytest.raises(ParameterError):
        F.BoseFock(0)


def test_bose_ccr_on_protected_sector():
    fk = F.BoseFock(2, 6)
    keep = fk.protected()
    for i, j in itertools.product(range(2), repeat=2):
        C = fk.annihilation(i) @ fk.creation(j) - fk.creation(j) @ fk.annihilation(i)
        ref = np.eye(fk.dim) * (i == j)
        assert np.abs((C - ref)[np.ix_(keep, keep)]).max() < 1e-12


def test_fermi_car():
    fk = F.FermiFock(3)
    assert fk.dim == 8
    for i, j in itertools.product(range(3), repeat=2):
        ai, aj = fk.annihilation(i), fk.annihilation(j)
        assert np.abs(ai @ fk.creation(j) + fk.creation(j) @ ai - np.eye(8) * (i == j)).max() < 1e-12
        assert np.abs(ai @ aj + aj @ ai).max() < 1e-12
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    acomm = fk.a(x) @ fk.a_star(y) + fk.a_star(y) @ fk.a(x)
    assert np.abs(acomm - np.vdot(x, y) * np.eye(8)).max() < 1e-12


def test_second_quantize_trivial_cases():
    assert np.allclose(F.second_quantize(np.eye(2), F.BoseFock(2, 3)), np.eye(10))
    assert np.allclose(F.second_quantize(np.eye(3), F.FermiFock(3)), np.eye(8))
    t = 0.7
    G = F.second_quantize([[t]], F.BoseFock(1, 3))
    assert np.allclose(G, np.diag([1, t, t ** 2, t ** 3]))
    with pytest.raises(ShapeError):
        F.second_quantize(np.eye(2), F.FermiFock(3))


def test_second_quantize_fermi_two_modes():
    s, t = 0.3, -1.2
    G = F.second_quantize(np.diag([s, t]), F.FermiFock(2))
    # basis bits: 00, 10, 01, 11
    assert np.allclose(G, np.diag([1, s, t, s * t]))
    # a swap of the two modes picks up a sign on the doubly occupied state
    G = F.second_quantize(np.array([[0, 1], [1, 0]]), F.FermiFock(2))
    ref = np.zeros((4, 4))
    ref[0, 0], ref[1, 2], ref[2, 1], ref[3, 3] = 1, 1, 1, -1
    assert np.allclose(G, ref)


def test_second_quantize_bose_symmetric_tensor_oracle():
    rng = np.random.default_rng(1)
    X = cmat(rng, 2)
    fk = F.BoseFock(2, 2)
    G = F.second_quantize(X, fk)
    # two-particle block from X (x) X restricted to symmetric tensors
    e = np.eye(2)

    def sym(s):
        modes = [i for i in range(2) for _ in range(s[i])]
        v = sum(np.kron(e[a], e[b]) for a, b in set(itertools.permutations(modes)))
        return v / np.linalg.norm(v)

    two = [k for k, s in enumerate(fk.states) if sum(s) == 2]
    B = np.array([sym(fk.states[k]) for k in two]).T
    ref = B.T @ np.kron(X, X) @ B
    assert np.allclose(G[np.ix_(two, two)], ref, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_second_quantize_multiplicative(seed):
    rng = np.random.default_rng(seed)
    X, Y = cmat(rng, 2), cmat(rng, 2)
    fk = F.FermiFock(2)
    assert np.allclose(F.second_quantize(X @ Y, fk), F.second_quantize(X, fk) @ F.second_quantize(Y, fk), atol=1e-10)
    bk = F.BoseFock(2, 4)
    lhs = F.second_quantize(X @ Y, bk)
    rhs = F.second_quantize(X, bk) @ F.second_quantize(Y, bk)
    # particle number is conserved so every sector is exact
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(lhs).max()))


def test_weyl_operator():
    fk = F.BoseFock(1, 20)
    W0 = F.weyl_operator([0.0], fk)
    assert np.array_equal(W0.matrix, np.eye(fk.dim))
    h = np.array([0.5])
    W = F.weyl_operator(h, fk)
    assert W.gate_ok and W.gate == pytest.approx(0.25 / 20)
    assert abs(W.matrix[0, 0] - math.exp(-0.125)) < 1e-6
    Wm = F.weyl_operator(-h, fk)
    assert np.abs((W.matrix @ Wm.matrix)[:10, :10] - np.eye(10)).max() < 1e-9


def test_weyl_gate_warning():
    with pytest.warns(RuntimeWarning):
        w = F.weyl_operator([2.0], F.BoseFock(1, 4))
    assert not w.gate_ok


def test_fermi_field():
    fk = F.FermiFock(1)
    assert np.linalg.norm(F.fermi_field([1.0], fk), 2) == pytest.approx(1.0)
    assert np.abs(F.fermi_field([0.0], fk)).max() == 0
    fk = F.FermiFock(3)
    rng = np.random.default_rng(2)
    h = rng.normal(size=3)
    P = F.fermi_field(h, fk)
    assert np.allclose(P @ P, np.dot(h, h) * np.eye(8), atol=1e-12)
    # Phi[h] Omega = h in the one-particle sector
    assert np.allclose(fk.one_particle().conj().T @ (P @ fk.vacuum()), h)


def test_polylog_values():
    assert F.polylog_series(1, 0.5) == pytest.approx(4.0, abs=1e-12)
    assert F.polylog_series(0.5, 0.0) == 1.0
    m = np.arange(1_000_000, dtype=float)
    direct = math.fsum(np.sqrt(m + 1) * 0.9 ** m)
    assert abs(F.polylog_series(0.5, 0.9) - direct) < 1e-10
    with pytest.raises(ParameterError):
        F.polylog_series(1, 1.0)


def test_polylog_against_scipy_free_closed_forms():
    # p = 2: sum (m+1)^2 x^m = (1 + x) / (1 - x)^3
    for x in (0.1, 0.5, 0.99):
        assert F.polylog_series(2, x) == pytest.approx((1 + x) / (1 - x) ** 3, rel=1e-12)


def test_bose_xi_upper():
    assert F.bose_xi_upper([], 1) == 1.0
    assert F.bose_xi_upper([0.5], 1) == pytest.approx(4.0)
    t, p = (0.3, 0.1), 0.5
    m = np.arange(400)
    total = 0.0
    for a in m:
        total += math.fsum((a + 1) ** p * t[0] ** (p * a) * (m + 1) ** p * t[1] ** (p * m))
    assert F.bose_xi_upper(t, p) == pytest.approx(total ** (1 / p), rel=1e-9)
    with pytest.raises(ParameterError):
        F.bose_xi_upper([1.0], 1)


def test_fermi_xi_upper():
    assert F.fermi_xi_upper([0.0], 1) == 1.0
    assert F.fermi_xi_upper([0.5], 1) == pytest.approx(2.0)
    assert F.fermi_xi_exp_bound([0.5], 1) == pytest.approx(math.e)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]))
def test_fermi_product_below_exp_bound(seed, p):
    t = np.random.default_rng(seed).uniform(0, 2, size=5)
    assert F.fermi_xi_upper(t, p) <= F.fermi_xi_exp_bound(t, p) * (1 + 1e-12)


def test_joint_bound_trivial():
    Tp = np.array([[0.0, 2.0], [0.0, 0.0]])
    jb = F.joint_upper_bound(Tp, np.zeros((2, 2)))
    absT = np.array([[0.0, 0.0], [0.0, 2.0]])
    assert np.allclose(jb.T, absT) and jb.sharp_norm
    t = 0.4
    jb = F.joint_upper_bound(t * np.eye(3), t * np.eye(3))
    assert np.allclose(jb.T, math.sqrt(2) * t * np.eye(3))
    assert jb.norm == pytest.approx(math.sqrt(2) * t) and not jb.sharp_norm
    with pytest.raises(ShapeError):
        F.joint_upper_bound(np.eye(2), np.eye(3))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_joint_bound_certificate(seed):
    rng = np.random.default_rng(seed)
    Tp, Tm = cmat(rng, 3), cmat(rng, 3)
    jb = F.joint_upper_bound(Tp, Tm)
    for A in (Tp, Tm):
        assert np.linalg.eigvalsh(jb.T @ jb.T - A.conj().T @ A).min() >= -1e-10 * max(1, jb.norm ** 2)
    assert np.linalg.eigvalsh(jb.T).min() >= -1e-12


def test_sandwich_zero_map():
    H = StandardSubspace.from_vectors(np.array([[1.0], [1j]]))
    for kind in ("bose", "fermi"):
        b = F.xi_sandwich(H, np.zeros((2, 2)), 1.0, kind)
        assert b.lower == 0 and b.upper == pytest.approx(1.0) and b.consistent


def test_sandwich_fermi_single_mode():
    H = StandardSubspace.from_vectors(np.array([[1.0]]))
    X = np.array([[0.4]])
    b = F.xi_sandwich(H, X, 1.0, "fermi")
    assert b.real_lp == pytest.approx(0.4)
    assert b.lower == pytest.approx(math.exp(-0.5) * 0.5 * 0.4)
    assert b.doubling_holds
    o = F.fermi_xi_oracle(H, X, np.random.default_rng(3), restarts=8)
    # algebra {1, Phi[e_1]}: the vacuum direction gives 1, the field gives 0.4
    assert o.values[0] == pytest.approx(1.0, abs=1e-8)
    assert b.lower <= o.lp(1.0) <= b.upper


def test_sandwich_rejects_bose_norm_and_kind():
    H = StandardSubspace.from_vectors(np.array([[1.0]]))
    with pytest.raises(ParameterError):
        F.xi_sandwich(H, np.array([[1.2]]), 1.0, "bose")
    with pytest.raises(ParameterError):
        F.xi_sandwich(H, np.array([[0.2]]), 1.0, "anyon")
    with pytest.raises(ShapeError):
        F.xi_sandwich(H, np.eye(2), 1.0)


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]))
def test_sandwich_brackets_fermi_oracle(seed, p):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = StandardSubspace.from_vectors(V)
    Z = cmat(rng, 2)
    X = Z @ Z.conj().T
    X *= rng.uniform(0.1, 0.9) / np.linalg.norm(X, 2)
    b = F.xi_sandwich(H, X, p, "fermi")
    assert b.doubling_holds and b.split_residual < 1e-9
    o = F.fermi_xi_oracle(H, X, rng, restarts=6).lp(p)
    assert b.lower <= o * (1 + 1e-9) and o <= b.upper * (1 + 1e-9)


def test_bose_upper_decreases_with_margin():
    gs = L.ground_state(L.Lattice("chain", (60,), mass=1.0))
    inner = np.arange(28, 32)
    H = StandardSubspace.from_vectors(np.array([[1.0]]))
    uppers = []
    for margin in (1, 2, 4, 8):
        outer = np.arange(28 - margin, 32 + margin)
        top = L.defect_spectrum(gs, inner, outer).values[0]
        b = F.xi_sandwich(H, np.array([[top ** 0.25]]), 1.0, "bose")
        assert b.consistent
        uppers.append(b.upper)
    assert all(a > b for a, b in zip(uppers, uppers[1:]))


def test_bose_truncation_defect_small():
    H = StandardSubspace.from_vectors(np.array([[1.0]]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert F.bose_truncation_defect(H, np.array([[0.3]]), 12) < 1e-6


def test_fermi_modular_cross_check():
    rng = np.random.default_rng(4)
    H = StandardSubspace.from_vectors(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    chk = F.fermi_modular_check(H)
    assert chk.cyclic and chk.residual < 1e-8
