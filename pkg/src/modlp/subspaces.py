"""Closed real subspaces of C^n, their Tomita operators, and conjugations
that commute with the modular data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth, subspace_angles

from .core import (
    RealLinear,
    approximation_numbers,
    imag_unit,
    lp_quasinorm,
    operator_power,
    quasinorm_constant,
    real_lp_quasinorm,
    realify_conj,
    to_complex_vectors,
    to_real_vectors,
)
from .errors import ContractViolation, DegenerateSubspaceError, NotStandardError, ParameterError, ShapeError

RANK_TOL = 1e-9
UNIT_TOL = 1e-9


def _real_orth(R: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    if R.size == 0:
        return np.zeros((R.shape[0], 0))
    return orth(R, rcond=tol)


def complex_orth(V: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the complex span of the columns of ``V``."""
    V = np.asarray(V, dtype=complex)
    if V.size == 0 or V.shape[1] == 0:
        return np.zeros((V.shape[0], 0), dtype=complex)
    return orth(V, rcond=tol)


def complex_span_of_real(R: np.ndarray) -> np.ndarray:
    """Complex orthonormal basis for a real subspace that is closed under ``i``."""
    if R.shape[1] == 0:
        return np.zeros((R.shape[0] // 2, 0), dtype=complex)
    return complex_orth(to_complex_vectors(R))


def projector(Q: np.ndarray) -> np.ndarray:
    return Q @ Q.conj().T


@dataclass
class StandardSubspace:
    """Closed real subspace of C^n given as the real span of complex vectors.

    ``basis`` is a real orthonormal basis in ``[Re; Im]`` coordinates. Despite
    the name the subspace need not be standard; :func:`tomita_data` reports
    cyclicity and separation.
    """

    basis: np.ndarray
    n: int

    @classmethod
    def from_vectors(cls, vectors, n: int | None = None) -> "StandardSubspace":
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        if n is not None and V.shape[0] != n:
            raise ShapeError(f"vectors live in C^{V.shape[0]}, expected C^{n}")
        n = V.shape[0]
        if V.shape[1] == 0:
            return cls(np.zeros((2 * n, 0)), n)
        if not np.all(np.isfinite(V)):
            raise ShapeError("spanning vectors have non-finite entries")
        R = to_real_vectors(V)
        s = np.linalg.svd(R, compute_uv=False)
        if s.max() == 0 or np.sum(s > RANK_TOL * s.max()) < V.shape[1]:
            raise DegenerateSubspaceError(
                "spanning vectors are real-linearly dependent at tolerance 1e-9")
        return cls(_real_orth(R), n)

    @classmethod
    def from_real_basis(cls, R: np.ndarray) -> "StandardSubspace":
        R = np.asarray(R, dtype=float)
        return cls(_real_orth(R), R.shape[0] // 2)

    @property
    def real_dim(self) -> int:
        return self.basis.shape[1]

    def vectors(self) -> np.ndarray:
        """Complex column vectors forming a real orthonormal basis."""
        return to_complex_vectors(self.basis)

    def projection(self) -> np.ndarray:
        """Real orthogonal projection ``E_H`` as a 2n x 2n matrix."""
        return self.basis @ self.basis.T

    def projection_op(self) -> RealLinear:
        return RealLinear.from_real(self.projection())

    def symplectic_complement(self) -> "StandardSubspace":
        """``{v : Im <v, h> = 0 for all h in H}``, the real complement of ``iH``."""
        iH = imag_unit(self.n) @ self.basis
        comp = null_space(iH.T) if iH.shape[1] else np.eye(2 * self.n)
        return StandardSubspace(comp, self.n)

    def real_complement(self) -> "StandardSubspace":
        comp = null_space(self.basis.T) if self.real_dim else np.eye(2 * self.n)
        return StandardSubspace(comp, self.n)

    def image(self, Y: RealLinear) -> "StandardSubspace":
        return StandardSubspace.from_real_basis(Y.real_matrix() @ self.basis)

    def contains(self, other: "StandardSubspace", tol: float = UNIT_TOL) -> bool:
        if other.real_dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return bool(np.linalg.norm(resid, 2) <= tol)

    def same_as(self, other: "StandardSubspace", tol: float = UNIT_TOL) -> bool:
        if self.real_dim != other.real_dim:
            return False
        if self.real_dim == 0:
            return True
        return bool(np.max(np.sin(subspace_angles(self.basis, other.basis))) <= tol)

    def direct_sum(self, other: "StandardSubspace") -> "StandardSubspace":
        """``H (+) K`` inside C^n (+) C^m."""
        n, m = self.n, other.n
        A = to_complex_vectors(self.basis)
        B = to_complex_vectors(other.basis)
        top = np.hstack([A, np.zeros((n, B.shape[1]))])
        bot = np.hstack([np.zeros((m, A.shape[1])), B])
        return StandardSubspace.from_vectors(np.vstack([top, bot]))


def intersection_with_i(H: StandardSubspace) -> np.ndarray:
    """Complex orthonormal basis of the complex subspace ``H cap iH``."""
    if H.real_dim == 0:
        return np.zeros((H.n, 0), dtype=complex)
    E = H.projection()
    JB = imag_unit(H.n) @ H.basis
    coeffs = null_space(JB - E @ JB, rcond=RANK_TOL)
    return complex_span_of_real(H.basis @ coeffs)


@dataclass
class Decomposition:
    """Orthogonal splitting ``C^n = H_perp (+) (H cap iH) (+) R``.

    Each block is a complex orthonormal basis; ``reduced`` is a complex
    matrix whose columns are a real basis of the standard part ``R H``.
    """

    perp: np.ndarray
    intersection: np.ndarray
    standard: np.ndarray
    reduced: np.ndarray


def decompose(H: StandardSubspace) -> Decomposition:
    n = H.n
    span = complex_orth(H.vectors())
    inter = intersection_with_i(H)
    perp = null_space(span.conj().T) if span.shape[1] else np.eye(n, dtype=complex)
    perp = perp.astype(complex)
    if inter.shape[1]:
        rest = span - inter @ (inter.conj().T @ span)
        std = complex_orth(rest)
    else:
        std = span
    P = projector(std)
    reduced = P @ H.vectors()
    # a real basis of R H has exactly dim_C(R) elements
    Rr = _real_orth(to_real_vectors(reduced))
    reduced = to_complex_vectors(Rr)
    if reduced.shape[1] != std.shape[1]:
        raise ContractViolation(
            f"standard part has real dim {reduced.shape[1]} but complex dim {std.shape[1]}")
    return Decomposition(perp, inter, std, reduced)


@dataclass
class PolarData:
    """Polar decomposition ``S = J Delta^(1/2)`` of an antilinear ``S``."""

    S: RealLinear
    J: RealLinear
    Delta: np.ndarray
    support: np.ndarray

    def modular_power(self, alpha: float) -> np.ndarray:
        return operator_power(self.Delta, alpha)


def antilinear_polar(A: np.ndarray, tol: float = RANK_TOL) -> PolarData:
    """Polar decomposition of the antilinear map ``v -> A conj(v)``.

    Returns ``Delta = S^* S`` (complex linear, positive) and the partial
    antiunitary ``J`` with ``S = J Delta^(1/2)``.
    """
    A = np.asarray(A, dtype=complex)
    U, s, Vh = np.linalg.svd(A)
    r = int(np.sum(s > tol * s.max())) if s.size and s.max() > 0 else 0
    U, s, Vh = U[:, :r], s[:r], Vh[:r]
    V = Vh.conj().T
    Delta = np.conj(V) @ np.diag(s ** 2) @ V.T
    Delta = 0.5 * (Delta + Delta.conj().T)
    Jpart = U @ Vh
    support = np.conj(V) @ V.T
    return PolarData(RealLinear.antilinear(A), RealLinear.antilinear(Jpart), Delta, support)


@dataclass
class TomitaData:
    S: RealLinear
    J: RealLinear
    Delta: np.ndarray
    standard_projection: np.ndarray
    decomposition: Decomposition
    cyclic: bool
    separating: bool

    @property
    def standard(self) -> bool:
        return self.cyclic and self.separating


def tomita_data(H: StandardSubspace, require_standard: bool = False) -> TomitaData:
    """Tomita operator ``S(h1 + i h2) = h1 - i h2`` and its polar data.

    For a subspace that is not standard, ``S`` is defined as zero on
    ``H_perp (+) (H cap iH)`` and as the Tomita operator of the standard
    part ``R H`` on the remaining block.
    """
    dec = decompose(H)
    cyclic = dec.perp.shape[1] == 0
    separating = dec.intersection.shape[1] == 0
    if require_standard and not (cyclic and separating):
        raise NotStandardError(
            f"subspace is not standard (cyclic={cyclic}, separating={separating})")
    M = dec.reduced
    if M.shape[1]:
        A = M @ np.conj(np.linalg.pinv(M, rcond=RANK_TOL))
    else:
        A = np.zeros((H.n, H.n), dtype=complex)
    polar = antilinear_polar(A)
    return TomitaData(polar.S, polar.J, polar.Delta, projector(dec.standard), dec, cyclic, separating)


def tomita_residuals(H: StandardSubspace, td: TomitaData) -> dict:
    """Self-consistency residuals of Tomita data, used in tests and reports."""
    P = td.standard_projection
    Delta, Jp = td.Delta, td.J.anti
    # J Delta J as a complex-linear matrix
    JDJ = Jp @ np.conj(Delta) @ np.conj(Jp)
    Dinv = operator_power(Delta, -1.0) if np.abs(Delta).max() > 0 else Delta
    sq = td.S.anti @ np.conj(td.S.anti)
    half = operator_power(Delta, 0.5) if np.abs(Delta).max() > 0 else Delta
    return {
        "J_antiunitary_on_support": float(np.abs(Jp.conj().T @ Jp - np.conj(P)).max()) if P.size else 0.0,
        "J_squared": float(np.abs(Jp @ np.conj(Jp) - P).max()),
        "JDeltaJ_inverse": float(np.abs(JDJ - Dinv).max())
        / max(1.0, float(np.abs(Dinv).max())),
        "S_polar": float(np.abs(Jp @ np.conj(half) - td.S.anti).max()),
        "S_involution": float(np.abs(sq - P).max()),
    }


# ---------------------------------------------------------------------------
# conjugations


@dataclass
class Conjugation:
    """Antiunitary involution ``v -> C conj(v)`` with ``C conj(C) = 1``."""

    C: np.ndarray
    report: dict = field(default_factory=dict)

    @classmethod
    def standard(cls, n: int) -> "Conjugation":
        return cls(np.eye(n, dtype=complex))

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def op(self) -> RealLinear:
        return RealLinear.antilinear(self.C)

    def __call__(self, v):
        return self.C @ np.conj(np.asarray(v, dtype=complex))

    def plus(self) -> RealLinear:
        return 0.5 * (RealLinear.linear(np.eye(self.n)) + self.op())

    def minus(self) -> RealLinear:
        return 0.5 * (RealLinear.linear(np.eye(self.n)) - self.op())

    def conjugate(self, X: np.ndarray) -> np.ndarray:
        """``Gamma X Gamma`` for complex-linear ``X``."""
        return self.C @ np.conj(X) @ np.conj(self.C)

    def commutes_with(self, X: np.ndarray) -> float:
        return float(np.abs(self.conjugate(X) - X).max()) if X.size else 0.0

    def involution_residual(self) -> float:
        return float(np.abs(self.C @ np.conj(self.C) - np.eye(self.n)).max())

    def unitarity_residual(self) -> float:
        return float(np.abs(self.C.conj().T @ self.C - np.eye(self.n)).max())

    def doubled(self) -> "Conjugation":
        """``[[0, Gamma], [Gamma, 0]]`` on C^n (+) C^n."""
        Z = np.zeros_like(self.C)
        return Conjugation(np.block([[Z, self.C], [self.C, Z]]))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_conjugation(rng: np.random.Generator, n: int) -> Conjugation:
    U = random_unitary(rng, n)
    return Conjugation(U @ U.T)


def _eigh_block(Delta: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if Q.shape[1] == 0:
        return np.zeros(0), np.zeros((Q.shape[0], 0), dtype=complex)
    M = Q.conj().T @ Delta @ Q
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return w, Q @ V


def construct_conjugation(H: StandardSubspace, tol: float = UNIT_TOL, check: bool = True) -> Conjugation:
    """Conjugation ``Gamma`` with ``Gamma H = H`` commuting with ``Delta_H`` and ``J_H``.

    The standard block is split by the spectrum of ``Delta`` into parts below,
    at and above 1. Below 1, ``Gamma`` conjugates coordinates in an eigenbasis
    of ``Delta``; at 1 it equals ``J``; above 1 it is transported by ``J``.
    On ``H_perp`` and ``H cap iH`` any conjugation preserving the block works;
    coordinate conjugation in their orthonormal bases is used.
    """
    td = tomita_data(H)
    dec = td.decomposition
    Jp = td.J.anti
    w, V = _eigh_block(td.Delta, dec.standard)
    below = V[:, w < 1 - tol]
    at_one = V[:, np.abs(w - 1) <= tol]
    above = V[:, w > 1 + tol]
    if below.shape[1] != above.shape[1]:
        raise ContractViolation("modular spectrum is not symmetric under inversion")
    G_below = below @ below.T
    C = dec.perp @ dec.perp.T + dec.intersection @ dec.intersection.T + G_below
    C = C + Jp @ np.conj(projector(at_one))
    C = C + Jp @ np.conj(G_below) @ Jp @ np.conj(projector(above))
    gamma = Conjugation(C)
    gamma.report = conjugation_postconditions(gamma, H, td)
    if check:
        bad = {k: v for k, v in gamma.report.items() if v > tol}
        if bad:
            raise ContractViolation(f"conjugation postconditions failed: {bad}")
    return gamma


def conjugation_postconditions(gamma: Conjugation, H: StandardSubspace, td: TomitaData | None = None) -> dict:
    td = td or tomita_data(H)
    C, Jp = gamma.C, td.J.anti
    GH = H.image(gamma.op())
    if GH.real_dim != H.real_dim:
        preserve = 1.0
    elif H.real_dim == 0:
        preserve = 0.0
    else:
        preserve = float(np.max(np.sin(subspace_angles(GH.basis, H.basis))))
    return {
        "involution": gamma.involution_residual(),
        "antiunitary": gamma.unitarity_residual(),
        "preserves_H": preserve,
        # relative to ||Delta||, which is unbounded over random subspaces
        "commutes_Delta": float(np.abs(C @ np.conj(td.Delta) - td.Delta @ C).max())
        / max(1.0, float(np.linalg.norm(td.Delta, 2))),
        "commutes_J": float(np.abs(C @ np.conj(Jp) - Jp @ np.conj(C)).max()),
    }


@dataclass
class GammaSplit:
    K_plus: np.ndarray
    K_minus: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    residual: float


def gamma_split_subspace(H: StandardSubspace, gamma: Conjugation, tol: float = UNIT_TOL) -> GammaSplit:
    """Complex subspaces ``K_pm = Gamma_pm H + i Gamma_pm H`` for ``Gamma H = H``.

    ``residual`` measures ``E_H = Gamma_+ E_+ + Gamma_- E_-`` in operator norm.
    """
    if gamma.n != H.n:
        raise ShapeError("conjugation and subspace live in different spaces")
    if not H.image(gamma.op()).same_as(H, tol=max(tol, 1e-8)):
        raise ParameterError("conjugation does not preserve the subspace")
    out = []
    for half in (gamma.plus(), gamma.minus()):
        R = half.real_matrix() @ H.basis
        R = np.hstack([R, imag_unit(H.n) @ R])
        out.append(complex_span_of_real(_real_orth(R)))
    Kp, Km = out
    Ep, Em = projector(Kp), projector(Km)
    recon = gamma.plus() @ RealLinear.linear(Ep) + gamma.minus() @ RealLinear.linear(Em)
    resid = float(np.linalg.norm(recon.real_matrix() - H.projection(), 2))
    return GammaSplit(Kp, Km, Ep, Em, resid)


@dataclass
class TGammaCheck:
    norm_T: float
    norm_plus: float
    norm_minus: float
    norm_residual: float
    p: float | None = None
    lp_T: float | None = None
    lp_plus: float | None = None
    lp_minus: float | None = None
    upper_constant: float | None = None
    lower_constant: float | None = None

    @property
    def lp_upper_holds(self) -> bool:
        return self.lp_T <= self.upper_constant * (self.lp_plus + self.lp_minus) * (1 + 1e-12)

    @property
    def lp_lower_holds(self) -> bool:
        return max(self.lp_plus, self.lp_minus) <= self.lower_constant * self.lp_T * (1 + 1e-12)


def combine_gamma(gamma: Conjugation, T_plus: np.ndarray, T_minus: np.ndarray) -> RealLinear:
    """``Gamma_+ T_+ + Gamma_- T_-`` as a real-linear operator."""
    return gamma.plus() @ RealLinear.linear(T_plus) + gamma.minus() @ RealLinear.linear(T_minus)


def tgamma_norm_check(gamma: Conjugation, T_plus, T_minus, p: float | None = None,
                      tol: float = 1e-9) -> TGammaCheck:
    """Compare ``||Gamma_+ T_+ + Gamma_- T_-||`` with ``max ||T_pm||``.

    ``T_pm`` must commute with ``Gamma``. With ``p`` given, the l^p comparison
    constants ``2^(1/p) k_p`` (upper) and ``2 k_p`` (lower) are attached.
    """
    Tp = np.asarray(T_plus, dtype=complex)
    Tm = np.asarray(T_minus, dtype=complex)
    for T in (Tp, Tm):
        if T.shape != gamma.C.shape:
            raise ShapeError("operators and conjugation have mismatched shapes")
        scale = max(1.0, float(np.abs(T).max()))
        if gamma.commutes_with(T) > tol * scale:
            raise ParameterError("operator does not commute with the conjugation")
    T = combine_gamma(gamma, Tp, Tm)
    nT = T.norm()
    npl = float(approximation_numbers(Tp)[0])
    nmi = float(approximation_numbers(Tm)[0])
    out = TGammaCheck(nT, npl, nmi, abs(nT - max(npl, nmi)))
    if p is not None:
        k = quasinorm_constant(p)
        out.p = float(p)
        out.lp_T = real_lp_quasinorm(T, p)
        out.lp_plus = lp_quasinorm(Tp, p)
        out.lp_minus = lp_quasinorm(Tm, p)
        out.upper_constant = 2.0 ** (1.0 / p) * k
        out.lower_constant = 2.0 * k
    return out


def commuting_pair(rng: np.random.Generator, gamma: Conjugation) -> np.ndarray:
    """Random operator commuting with ``gamma``: ``U D U^*`` with ``D`` real, ``C = U U^T``."""
    # Takagi-type factor of C: C = U U^T with U unitary
    U = takagi_factor(gamma.C)
    n = gamma.n
    D = rng.normal(size=(n, n))
    return U @ D @ U.conj().T


def takagi_factor(C: np.ndarray) -> np.ndarray:
    """Unitary ``U`` with ``C = U U^T``, built from the fixed points of ``v -> C conj(v)``.

    Fixed vectors have real mutual inner products, so a real orthonormal basis
    of the fixed space is also a complex orthonormal basis.
    """
    n = C.shape[0]
    fix = _real_orth(0.5 * (np.eye(2 * n) + realify_conj(C)))
    U = to_complex_vectors(fix)
    if U.shape[1] != n or np.abs(U @ U.T - C).max() > 1e-8:
        raise ContractViolation("matrix is not the coefficient of a conjugation")
    return U


@dataclass
class StrictNormCheck:
    norm: float
    alpha: float
    trivial_intersection: bool

    @property
    def holds(self) -> bool:
        return self.norm <= 1 + 1e-9 and (not self.trivial_intersection or self.norm < 1)


def strict_norm_check(H: StandardSubspace, H_sub: StandardSubspace, alpha: float) -> StrictNormCheck:
    """``||Delta_H^alpha E_{H_sub}||`` for ``H_sub`` inside ``H`` and ``0 < alpha < 1/2``.

    The norm is at most 1, and strictly below 1 whenever ``H_sub`` meets the
    symplectic complement of ``H`` trivially.
    """
    if not 0 < alpha < 0.5:
        raise ParameterError("alpha must lie in (0, 1/2)")
    if not H.contains(H_sub):
        raise ParameterError("H_sub is not contained in H")
    td = tomita_data(H)
    Da = operator_power(td.Delta, alpha)
    Y = RealLinear.linear(Da) @ H_sub.projection_op()
    comp = H.symplectic_complement()
    meet = _real_intersection_dim(H_sub.basis, comp.basis)
    return StrictNormCheck(Y.norm(), float(alpha), meet == 0)


def _real_intersection_dim(A: np.ndarray, B: np.ndarray) -> int:
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0
    s = np.cos(subspace_angles(A, B))
    return int(np.sum(s > 1 - 1e-9))
