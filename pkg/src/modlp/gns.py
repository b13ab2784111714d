"""GNS representations and modular data for states on matrix algebras.

The GNS space of a state with density matrix ``rho`` on a *-subalgebra
``A`` of ``M_d`` is realised concretely as the subspace ``A rho^(1/2)`` of
``M_d`` with the Hilbert-Schmidt inner product, so ``Omega = rho^(1/2)`` and
``pi(a)`` is left multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from .core import lp_from_values, operator_power, quasinorm_constant
from .errors import ContractViolation, NotPositiveError, ParameterError, ShapeError
from .subspaces import PolarData, antilinear_polar, projector

RANK_TOL = 1e-10


def _vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=complex).reshape(-1)


def _hs_orth(mats: list[np.ndarray], d: int, tol: float = RANK_TOL) -> list[np.ndarray]:
    if not mats:
        return []
    M = np.array([_vec(m) for m in mats]).T
    Q = orth(M, rcond=tol)
    return [Q[:, k].reshape(d, d) for k in range(Q.shape[1])]


@dataclass
class MatrixAlgebra:
    """Unital *-subalgebra of ``M_d`` with a Hilbert-Schmidt orthonormal basis."""

    basis: list[np.ndarray]
    d: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def full(cls, d: int) -> "MatrixAlgebra":
        units = []
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[i, j] = 1
                units.append(E)
        return cls(units, d)

    @classmethod
    def from_blocks(cls, sizes: list[int]) -> "MatrixAlgebra":
        """Block-diagonal algebra ``M_{n1} (+) M_{n2} (+) ...``."""
        if not sizes or any(int(s) < 1 for s in sizes):
            raise ShapeError("block sizes must be positive integers")
        d = int(sum(sizes))
        units, off = [], 0
        for s in sizes:
            for i in range(s):
                for j in range(s):
                    E = np.zeros((d, d), dtype=complex)
                    E[off + i, off + j] = 1
                    units.append(E)
            off += s
        return cls(units, d)

    @classmethod
    def from_generators(cls, gens: list[np.ndarray], max_rounds: int = 64) -> "MatrixAlgebra":
        """Smallest unital *-algebra containing ``gens``."""
        if not gens:
            raise ShapeError("at least one generator is needed")
        d = np.asarray(gens[0]).shape[0]
        for g in gens:
            g = np.asarray(g)
            if g.shape != (d, d) or not np.all(np.isfinite(g)):
                raise ShapeError("generators must be finite square matrices of equal size")
        seeds = [np.eye(d, dtype=complex)] + [np.asarray(g, dtype=complex) for g in gens]
        seeds += [g.conj().T for g in seeds]
        basis = _hs_orth(seeds, d)
        for _ in range(max_rounds):
            prods = [a @ b for a in basis for b in basis]
            new = _hs_orth(basis + prods, d)
            if len(new) == len(basis):
                return cls(basis, d)
            basis = new
        raise ContractViolation("generator closure did not stabilise")

    @classmethod
    def amplified(cls, alg: "MatrixAlgebra", k: int) -> "MatrixAlgebra":
        """``A (x) 1_k`` inside ``M_{d k}``."""
        one = np.eye(k)
        return cls([np.kron(b, one) / np.sqrt(k) for b in alg.basis], alg.d * k)

    def contains(self, X: np.ndarray, tol: float = 1e-9) -> bool:
        B = np.array([_vec(b) for b in self.basis]).T
        x = _vec(X)
        r = x - B @ (B.conj().T @ x)
        return bool(np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(x)))

    def contains_algebra(self, other: "MatrixAlgebra") -> bool:
        return all(self.contains(b) for b in other.basis)

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        return np.array([np.vdot(b, X) for b in self.basis])

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        return sum(ci * b for ci, b in zip(c, self.basis))

    def random_unit_element(self, rng: np.random.Generator) -> np.ndarray:
        X = self.random_element(rng)
        return X / np.linalg.norm(X, 2)


def check_density(rho: np.ndarray, d: int | None = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or (d is not None and rho.shape[0] != d):
        raise ShapeError("density matrix has the wrong shape")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise NotPositiveError("density matrix is not self-adjoint")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -1e-10:
        raise NotPositiveError(f"density matrix has negative eigenvalue {w.min():.3e}")
    if abs(np.trace(rho).real - 1) > 1e-8:
        raise ParameterError(f"density matrix has trace {np.trace(rho).real:.12g}, expected 1")
    return 0.5 * (rho + rho.conj().T)


@dataclass
class GNSData:
    """GNS triple with modular data of ``pi(A)''`` and the vector ``Omega``.

    ``W`` is an orthonormal basis (columns, as vectorised d x d matrices) of
    the GNS space. ``Q`` projects onto the closure of ``M' Omega``; the
    Tomita operator is ``S Q a Omega = Q a^* Omega`` and vanishes on the
    complement of that range.
    """

    algebra: MatrixAlgebra
    rho: np.ndarray
    W: np.ndarray
    Omega: np.ndarray
    Q: np.ndarray
    polar: PolarData
    commutant: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    @property
    def Delta(self) -> np.ndarray:
        return self.polar.Delta

    @property
    def J(self):
        return self.polar.J

    @property
    def S(self):
        return self.polar.S

    @property
    def standard(self) -> bool:
        return bool(np.allclose(self.Q, np.eye(self.dim), atol=1e-9))

    def pi(self, a: np.ndarray) -> np.ndarray:
        d = self.algebra.d
        L = np.kron(np.asarray(a, dtype=complex), np.eye(d))
        return self.W.conj().T @ L @ self.W

    def vector(self, a: np.ndarray) -> np.ndarray:
        """``pi(a) Omega``."""
        return self.W.conj().T @ _vec(np.asarray(a) @ self.sqrt_rho)

    @property
    def sqrt_rho(self) -> np.ndarray:
        return operator_power(self.rho, 0.5)

    def modular_power(self, alpha: float) -> np.ndarray:
        return operator_power(self.Delta, alpha)


def _commutant(ops: list[np.ndarray], r: int) -> list[np.ndarray]:
    I = np.eye(r)
    G = np.zeros((r * r, r * r), dtype=complex)
    for P in ops:
        K = np.kron(P, I) - np.kron(I, P.T)
        G += K.conj().T @ K
    w, V = np.linalg.eigh(G)
    N = V[:, w <= 1e-12 * max(1.0, w.max())]
    return [N[:, k].reshape(r, r) for k in range(N.shape[1])]


def gns_construct(algebra: MatrixAlgebra, rho: np.ndarray) -> GNSData:
    """GNS representation of ``a -> tr(rho a)`` on ``algebra`` with modular data."""
    d = algebra.d
    rho = check_density(rho, d)
    half = operator_power(rho, 0.5)
    vecs = np.array([_vec(b @ half) for b in algebra.basis]).T
    W = orth(vecs, rcond=RANK_TOL)
    r = W.shape[1]
    if r == 0:
        raise ContractViolation("GNS space is trivial")
    Omega = W.conj().T @ _vec(half)
    reps = [W.conj().T @ np.kron(b, np.eye(d)) @ W for b in algebra.basis]
    comm = _commutant(reps, r)
    cvecs = np.array([x @ Omega for x in comm]).T
    Q = projector(orth(cvecs, rcond=1e-9))
    U = np.array([Q @ (P @ Omega) for P in reps]).T
    Wst = np.array([Q @ (W.conj().T @ _vec(b.conj().T @ half)) for b in algebra.basis]).T
    A_S = Wst @ np.linalg.pinv(np.conj(U), rcond=1e-9)
    polar = antilinear_polar(A_S, tol=1e-9)
    return GNSData(algebra, rho, W, Omega, Q, polar, comm)


def gns_residuals(g: GNSData) -> dict:
    """Defining identities of the modular data, evaluated on the algebra basis."""
    half = g.modular_power(0.5)
    dq = 0.0
    for b in g.algebra.basis:
        lhs = np.linalg.norm(half @ g.vector(b))
        rhs = np.linalg.norm(g.Q @ g.vector(b.conj().T))
        dq = max(dq, abs(lhs - rhs))
    Jp = g.J.anti
    out = {
        "delta_Q": dq,
        "J_squared": float(np.abs(Jp @ np.conj(Jp) - g.Q).max()),
        "S_on_vectors": max(
            float(np.linalg.norm(g.S(g.Q @ g.vector(b)) - g.Q @ g.vector(b.conj().T)))
            for b in g.algebra.basis),
    }
    # J N J lies in N' on the range of Q, with N = Q M Q
    worst = 0.0
    QMQ = [g.Q @ g.pi(b) @ g.Q for b in g.algebra.basis]
    for b in g.algebra.basis:
        JbJ = Jp @ np.conj(g.pi(b)) @ np.conj(Jp)
        for n in QMQ:
            worst = max(worst, float(np.abs(JbJ @ n - n @ JbJ).max()))
    out["JNJ_commutes"] = worst
    return out


def faithful_modular_operator(g: GNSData) -> np.ndarray:
    """``L_rho R_rho^{-1}`` compressed to the GNS space; valid for faithful states."""
    d = g.algebra.d
    rinv = operator_power(g.rho, -1.0)
    M = np.kron(g.rho, np.eye(d)) @ np.kron(np.eye(d), rinv.T)
    return g.W.conj().T @ M @ g.W


def restricted(g: GNSData, sub: MatrixAlgebra) -> GNSData:
    """GNS data of the restriction of the state to a subalgebra."""
    if sub.d != g.algebra.d or not g.algebra.contains_algebra(sub):
        raise ParameterError("subalgebra is not contained in the algebra")
    return gns_construct(sub, g.rho)


# ---------------------------------------------------------------------------
# maps b -> Delta^alpha pi(b) Omega


@dataclass
class XiMap:
    """Matrix of ``b -> Delta^alpha pi(b) Omega`` on a subalgebra.

    Columns correspond to a Hilbert-Schmidt orthonormal basis of the
    subalgebra. Two Hilbert-space surrogates bracket the approximation
    numbers for the operator-norm domain: with the Hilbert-Schmidt norm on
    the domain they are lower bounds (``||b|| <= ||b||_HS``), with the GNS
    norm ``||b Omega||`` they are upper bounds (``||b Omega|| <= ||b||``).
    """

    matrix: np.ndarray
    vectors: np.ndarray
    alpha: float

    def hs_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def gns_values(self) -> np.ndarray:
        Qb = orth(self.vectors, rcond=1e-10)
        if Qb.shape[1] == 0:
            return np.zeros(0)
        # Delta^alpha restricted to the closed span of B Omega
        return np.linalg.svd(self._delta_alpha @ Qb, compute_uv=False)

    def lp(self, p: float, domain: str = "hs") -> float:
        vals = self.hs_values() if domain == "hs" else self.gns_values()
        return lp_from_values(vals, p)

    _delta_alpha: np.ndarray = field(default=None, repr=False)


def xi_alpha_map(g: GNSData, sub: MatrixAlgebra, alpha: float) -> XiMap:
    if not 0 <= alpha <= 0.5:
        raise ParameterError("alpha must lie in [0, 1/2]")
    if sub.d != g.algebra.d or not g.algebra.contains_algebra(sub):
        raise ParameterError("subalgebra is not contained in the algebra")
    Da = g.modular_power(alpha)
    V = np.array([g.vector(b) for b in sub.basis]).T
    m = XiMap(Da @ V, V, float(alpha))
    m._delta_alpha = Da
    return m


def direct_sum_xi(g1: GNSData, g2: GNSData, sub: MatrixAlgebra, alpha: float,
                  r1: float, r2: float) -> XiMap:
    """``b -> Delta^alpha b Omega`` for ``Delta = Delta_1 (+) Delta_2`` and
    ``Omega = sqrt(r1) Omega_1 (+) sqrt(r2) Omega_2``."""
    x1 = xi_alpha_map(g1, sub, alpha)
    x2 = xi_alpha_map(g2, sub, alpha)
    M = np.vstack([np.sqrt(r1) * x1.matrix, np.sqrt(r2) * x2.matrix])
    V = np.vstack([np.sqrt(r1) * x1.vectors, np.sqrt(r2) * x2.vectors])
    Da = np.block([[x1._delta_alpha, np.zeros((x1.matrix.shape[0], x2.matrix.shape[0]))],
                   [np.zeros((x2.matrix.shape[0], x1.matrix.shape[0])), x2._delta_alpha]])
    m = XiMap(M, V, float(alpha))
    m._delta_alpha = Da
    return m


def sampled_bernstein(xi: XiMap, sub: MatrixAlgebra, rng: np.random.Generator,
                      samples: int = 4000) -> np.ndarray:
    """Sampling estimate of the Bernstein numbers of ``xi`` on the operator-norm ball.

    Index 0 is the sampled sup of ``||Xi b||`` over ``||b|| = 1`` (a lower
    bound on ``alpha_0``); the last index is the sampled minimum over the
    whole subalgebra. Intermediate indices use nested coordinate subspaces
    of the right singular vectors of the Hilbert-Schmidt surrogate.
    """
    _, _, Vh = np.linalg.svd(xi.matrix)
    k = sub.dim
    out = np.zeros(k)
    B = np.array([_vec(b) for b in sub.basis]).T
    for n in range(k):
        E = Vh[: n + 1].conj().T
        best = np.inf
        for _ in range(samples):
            c = E @ (rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))
            b = (B @ c).reshape(sub.d, sub.d)
            nb = np.linalg.norm(b, 2)
            best = min(best, np.linalg.norm(xi.matrix @ c) / nb)
        out[n] = best
    sup = 0.0
    for _ in range(samples):
        c = rng.normal(size=k) + 1j * rng.normal(size=k)
        b = (B @ c).reshape(sub.d, sub.d)
        sup = max(sup, np.linalg.norm(xi.matrix @ c) / np.linalg.norm(b, 2))
    out[0] = max(out[0], sup)
    return out


# ---------------------------------------------------------------------------
# monotonicity checks


@dataclass
class InclusionCheck:
    alpha: float
    worst_slack: float
    checked: int

    @property
    def holds(self) -> bool:
        return self.worst_slack >= -1e-10


def inclusion_check(big: MatrixAlgebra, sub: MatrixAlgebra, rho: np.ndarray, alpha: float,
                    rng: np.random.Generator | None = None, extra: int = 20) -> InclusionCheck:
    """Pointwise comparison of ``||Delta^alpha b Omega||`` for a state and its restriction.

    Returns the smallest slack ``||Delta_sub^alpha b Omega|| - ||Delta^alpha b Omega||``
    over the subalgebra basis and ``extra`` random elements.
    """
    if not 0 <= alpha <= 0.5:
        raise ParameterError("alpha must lie in [0, 1/2]")
    if not big.contains_algebra(sub):
        raise ParameterError("subalgebra is not contained in the algebra")
    gw = gns_construct(big, rho)
    gl = gns_construct(sub, rho)
    Dw, Dl = gw.modular_power(alpha), gl.modular_power(alpha)
    elems = list(sub.basis)
    if rng is not None:
        elems += [sub.random_element(rng) for _ in range(extra)]
    worst = np.inf
    for b in elems:
        lhs = np.linalg.norm(Dw @ gw.vector(b))
        rhs = np.linalg.norm(Dl @ gl.vector(b))
        worst = min(worst, (rhs - lhs) / max(1.0, rhs))
    return InclusionCheck(float(alpha), float(worst), len(elems))


@dataclass
class MixtureCheck:
    alpha: float
    p: float
    lhs: float
    middle: float
    parts: tuple[float, float]
    rhs: float
    constant: float
    weights: tuple[float, float] = (0.5, 0.5)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        """The stated bound: mixture quasi-norm below the weighted sum."""
        return self.lhs <= self.rhs * (1 + 1e-9)

    @property
    def direct_sum_bracket_holds(self) -> bool:
        """``sqrt(r_i) ||Xi_i|| <= ||Xi_sum|| <= k_p (...)`` for the direct-sum map."""
        tol = 1 + 1e-9
        lo = max(np.sqrt(self.weights[0]) * self.parts[0], np.sqrt(self.weights[1]) * self.parts[1])
        return lo <= self.middle * tol and self.middle <= self.rhs * tol

    @property
    def mixture_below_direct_sum(self) -> bool:
        """Whether the mixture map is dominated by the direct-sum map.

        This does not hold in general: the direct-sum algebra is larger than
        the diagonally embedded one, and enlarging the algebra decreases
        ``||Delta^alpha a Omega||``. Reported for diagnostics only.
        """
        return self.lhs <= self.middle * (1 + 1e-9)


def convex_mixture_check(big: MatrixAlgebra, sub: MatrixAlgebra, rho1: np.ndarray, rho2: np.ndarray,
                         r1: float, alpha: float, p: float) -> MixtureCheck:
    """Quasi-norm of the map for a mixture against the mixture of the quasi-norms.

    Quasi-norms use the Hilbert-Schmidt norm on the subalgebra, which is fixed
    independently of the state, so pointwise domination transfers to the
    approximation numbers.
    """
    if not 0 < r1 < 1:
        raise ParameterError("mixing weight must lie in (0, 1)")
    r2 = 1.0 - r1
    rho = r1 * np.asarray(rho1) + r2 * np.asarray(rho2)
    g = gns_construct(big, rho)
    g1 = gns_construct(big, rho1)
    g2 = gns_construct(big, rho2)
    lhs = xi_alpha_map(g, sub, alpha).lp(p)
    x1 = xi_alpha_map(g1, sub, alpha).lp(p)
    x2 = xi_alpha_map(g2, sub, alpha).lp(p)
    mid = direct_sum_xi(g1, g2, sub, alpha, r1, r2).lp(p)
    k = quasinorm_constant(p)
    rhs = k * (np.sqrt(r1) * x1 + np.sqrt(r2) * x2)
    return MixtureCheck(float(alpha), float(p), lhs, mid, (x1, x2), float(rhs), k, (float(r1), r2))


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real
