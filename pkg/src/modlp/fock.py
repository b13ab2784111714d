"""Bose (truncated) and Fermi Fock spaces over C^n, second quantisation and
nuclearity bounds for ``A -> Gamma(X_1) A Omega``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .core import RealLinear, approximation_numbers, lp_from_values, real_lp_quasinorm
from .errors import ContractViolation, ParameterError, ShapeError
from .gns import MatrixAlgebra, gns_construct, _vec
from .subspaces import Conjugation, StandardSubspace, gamma_split_subspace, tomita_data

POLYLOG_TOL = 1e-12
MAX_POLYLOG_TERMS = 200_000_000


class _Fock:
    n: int
    states: list[tuple[int, ...]]
    _lower: list[np.ndarray]

    @property
    def dim(self) -> int:
        return len(self.states)

    def annihilation(self, i: int) -> np.ndarray:
        return self._lower[i]

    def creation(self, i: int) -> np.ndarray:
        return self._lower[i].conj().T

    def a(self, h) -> np.ndarray:
        """``a(h) = sum_i conj(h_i) a_i``, antilinear in ``h``."""
        h = self._vec(h)
        return sum(np.conj(h[i]) * self._lower[i] for i in range(self.n))

    def a_star(self, h) -> np.ndarray:
        return self.a(h).conj().T

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1
        return v

    def one_particle(self) -> np.ndarray:
        """Isometry ``C^n -> F`` onto the one-particle sector."""
        V = np.zeros((self.dim, self.n), dtype=complex)
        for i in range(self.n):
            V[:, i] = self.creation(i) @ self.vacuum()
        return V

    def particle_number(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])

    def _vec(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=complex).ravel()
        if h.shape != (self.n,):
            raise ShapeError(f"one-particle vector must have length {self.n}")
        return h


class BoseFock(_Fock):
    """Symmetric Fock space over C^n truncated at total occupation ``n_max``.

    Basis: occupation tuples ordered by total number, then lexicographically
    descending in the first mode.
    """

    def __init__(self, n: int, n_max: int = 12):
        if n < 1 or n_max < 0:
            raise ParameterError("need n >= 1 modes and n_max >= 0")
        self.n, self.n_max = int(n), int(n_max)
        states = []
        for total in range(self.n_max + 1):
            level = [s for s in itertools.product(range(total + 1), repeat=self.n) if sum(s) == total]
            states.extend(sorted(level, reverse=True))
        self.states = states
        self.index = {s: k for k, s in enumerate(states)}
        self._lower = []
        for i in range(self.n):
            a = np.zeros((self.dim, self.dim))
            for k, s in enumerate(states):
                if s[i] > 0:
                    t = list(s)
                    t[i] -= 1
                    a[self.index[tuple(t)], k] = math.sqrt(s[i])
            self._lower.append(a)

    def protected(self) -> np.ndarray:
        """Mask of basis states with total occupation below ``n_max``."""
        return self.particle_number() < self.n_max


class FermiFock(_Fock):
    """Antisymmetric Fock space over C^n, dimension ``2^n``.

    Basis state ``k`` has occupation bits ``(k >> i) & 1`` and equals
    ``a*_{i_1} ... a*_{i_r} Omega`` with ``i_1 < ... < i_r``.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ParameterError("need n >= 1 modes")
        self.n = int(n)
        dim = 2 ** self.n
        self.states = [tuple((k >> i) & 1 for i in range(self.n)) for k in range(dim)]
        self._lower = []
        for i in range(self.n):
            a = np.zeros((dim, dim))
            for k in range(dim):
                if (k >> i) & 1:
                    sign = (-1) ** bin(k & ((1 << i) - 1)).count("1")
                    a[k ^ (1 << i), k] = sign
            self._lower.append(a)


def second_quantize(X1, fock: _Fock) -> np.ndarray:
    """``Gamma(X_1) = (+)_k X_1^(x)k`` on the (anti)symmetric sectors.

    Built column by column as ``prod_i a*(X_1 e_i)^(mu_i) Omega / sqrt(mu!)``.
    """
    X1 = np.asarray(X1, dtype=complex)
    if X1.shape != (fock.n, fock.n):
        raise ShapeError(f"X_1 must be {fock.n} x {fock.n}")
    creators = [fock.a_star(X1[:, i]) for i in range(fock.n)]
    out = np.zeros((fock.dim, fock.dim), dtype=complex)
    omega = fock.vacuum()
    for k, s in enumerate(fock.states):
        v = omega
        for i in reversed(range(fock.n)):
            for _ in range(s[i]):
                v = creators[i] @ v
        out[:, k] = v / math.sqrt(math.prod(math.factorial(m) for m in s))
    return out


@dataclass
class WeylOperator:
    matrix: np.ndarray
    unitarity_defect: float
    gate: float
    gate_ok: bool


def weyl_operator(h, fock: BoseFock) -> WeylOperator:
    """``W(h) = exp(i (a*(h) + a(h)))`` on the truncated space.

    The accuracy gate ``||h||^2 / n_max <= 0.1`` is reported and a warning is
    issued when it fails.
    """
    h = fock._vec(h)
    phi = fock.a_star(h) + fock.a(h)
    W = expm(1j * phi)
    defect = float(np.linalg.norm(W.conj().T @ W - np.eye(fock.dim), 2))
    gate = float(np.vdot(h, h).real / max(fock.n_max, 1))
    ok = gate <= 0.1
    if not ok:
        warnings.warn(f"truncation gate ||h||^2/n_max = {gate:.3g} exceeds 0.1", RuntimeWarning, stacklevel=2)
    return WeylOperator(W, defect, gate, ok)


def fermi_field(h, fock: FermiFock) -> np.ndarray:
    """``Phi[h] = a*(h) + a(h)``."""
    return fock.a_star(h) + fock.a(h)


# ---------------------------------------------------------------------------
# scalar bounds


def polylog_series(p: float, x: float, tol: float = POLYLOG_TOL) -> float:
    """``sum_{m >= 0} (m+1)^p x^m`` to absolute accuracy ``tol``.

    Terms are summed in blocks; the tail after term ``M`` is bounded by a
    geometric series with ratio ``x ((M+2)/(M+1))^max(p, 0)``.
    """
    p, x = float(p), float(x)
    if not 0 <= x < 1 - 1e-12:
        raise ParameterError(f"series diverges or is undefined for x = {x}")
    if x == 0:
        return 1.0
    total = 0.0
    start, block = 0, 4096
    while True:
        m = np.arange(start, start + block, dtype=float)
        terms = np.exp(p * np.log1p(m) + m * np.log(x))
        total += math.fsum(terms)
        last = start + block - 1
        ratio = x * ((last + 2) / (last + 1)) ** max(p, 0.0)
        if ratio < 1:
            nxt = math.exp(p * math.log1p(last + 1) + (last + 1) * math.log(x))
            tail = nxt / (1 - ratio)
            if tail <= tol:
                return total + tail / 2
        start += block
        block = min(block * 2, 1 << 22)
        if start > MAX_POLYLOG_TERMS:
            raise ParameterError(f"series converges too slowly at x = {x}")


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float).ravel()
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ParameterError("t values must be finite and non-negative")
    return t


def bose_xi_upper(t_values, p: float) -> float:
    """``(prod_l sum_m (m+1)^p t_l^(p m))^(1/p)``; needs every ``t_l < 1``."""
    t = _check_t(t_values)
    if np.any(t >= 1):
        raise ParameterError("Bose bound needs ||T|| < 1")
    logs = [math.log(polylog_series(p, tl ** p)) for tl in t if tl > 0]
    return math.exp(math.fsum(logs) / p)


def fermi_xi_upper(t_values, p: float) -> float:
    """``(prod_j (1 + (2 t_j)^p))^(1/p)``."""
    t = _check_t(t_values)
    return math.exp(math.fsum(np.log1p((2 * t) ** p)) / p)


def fermi_xi_exp_bound(t_values, p: float) -> float:
    """``exp(||2T||_p^p / p)``, dominating :func:`fermi_xi_upper`."""
    t = _check_t(t_values)
    return math.exp(float(np.sum((2 * t) ** p)) / p)


@dataclass
class JointBound:
    T: np.ndarray
    eigenvalues: np.ndarray
    norm: float
    certificate: float
    max_part_norm: float

    @property
    def sharp_norm(self) -> bool:
        """Whether ``||T|| <= max ||T_pm||``."""
        return self.norm <= self.max_part_norm * (1 + 1e-12)


def joint_upper_bound(T_plus, T_minus, tol: float = 1e-9) -> JointBound:
    """Positive ``T = (|T_+|^2 + |T_-|^2)^(1/2)``, so that ``T^2 >= |T_pm|^2``."""
    Tp = np.asarray(T_plus, dtype=complex)
    Tm = np.asarray(T_minus, dtype=complex)
    if Tp.ndim != 2 or Tp.shape[0] != Tp.shape[1] or Tp.shape != Tm.shape:
        raise ShapeError("T_plus and T_minus must be square of the same size")
    Ap, Am = Tp.conj().T @ Tp, Tm.conj().T @ Tm
    G = 0.5 * ((Ap + Am) + (Ap + Am).conj().T)
    w, V = np.linalg.eigh(G)
    t = np.sqrt(np.clip(w, 0, None))
    T = (V * t) @ V.conj().T
    T2 = T @ T
    cert = min(float(np.linalg.eigvalsh(T2 - A).min()) for A in (Ap, Am))
    if cert < -tol * max(1.0, float(t.max(initial=0.0)) ** 2):
        raise ContractViolation(f"joint upper bound certificate failed: {cert:.3e}")
    norm = float(t.max(initial=0.0))
    parts = max(float(approximation_numbers(Tp)[0]), float(approximation_numbers(Tm)[0]))
    return JointBound(T, np.sort(t)[::-1], norm, cert, parts)


# ---------------------------------------------------------------------------
# sandwich


@dataclass
class XiBounds:
    p: float
    lower: float
    upper: float
    kind: str
    method: str
    real_lp: float
    doubled_lp: float
    doubling_constant: float
    split_residual: float
    joint: JointBound = field(repr=False)
    oracle: float | None = None

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper + 1e-9

    @property
    def doubling_holds(self) -> bool:
        return self.doubled_lp <= self.doubling_constant * self.real_lp * (1 + 1e-9) + 1e-300


def xh_operator(H: StandardSubspace, X1) -> RealLinear:
    """``X_1 E_H`` as a real-linear operator."""
    X1 = np.asarray(X1, dtype=complex)
    if X1.shape != (H.n, H.n):
        raise ShapeError("X_1 and H live in different spaces")
    return RealLinear.linear(X1) @ H.projection_op()


def xi_sandwich(H: StandardSubspace, X1, p: float, kind: str = "bose") -> XiBounds:
    """Lower and upper bounds on the nuclearity of ``A -> Gamma(X_1) A Omega``.

    ``lower = e^(-1/2) 2^(-1/p) ||X_1 E_H||_(R,p)``. The upper bound doubles the
    system with complex conjugation ``Gamma``, splits the doubled subspace
    into ``Gamma``-invariant parts ``K_pm``, takes the joint bound ``T`` of
    ``X E_pm`` and evaluates the Bose polylog product or the Fermi product on
    the eigenvalues of ``T``.
    """
    if kind not in ("bose", "fermi"):
        raise ParameterError(f"kind must be 'bose' or 'fermi', got {kind!r}")
    p = float(p)
    if not p > 0:
        raise ParameterError("p must be positive")
    X1 = np.asarray(X1, dtype=complex)
    Y = xh_operator(H, X1)
    real_lp = real_lp_quasinorm(Y, p)
    if kind == "bose" and Y.norm() >= 1:
        raise ParameterError(f"Bose branch needs ||X_1 E_H|| < 1, got {Y.norm():.6g}")
    lower = math.exp(-0.5) * 2.0 ** (-1.0 / p) * real_lp

    n = H.n
    gamma = Conjugation.standard(n).doubled()
    Hd = H.direct_sum(StandardSubspace.from_vectors(np.conj(H.vectors()), n)) if H.real_dim else \
        StandardSubspace(np.zeros((4 * n, 0)), 2 * n)
    Z = np.zeros((n, n))
    Xd = np.block([[X1, Z], [Z, np.conj(X1)]])
    doubled_lp = real_lp_quasinorm(xh_operator(Hd, Xd), p)
    split = gamma_split_subspace(Hd, gamma)
    joint = joint_upper_bound(Xd @ split.E_plus, Xd @ split.E_minus)
    if kind == "bose":
        if joint.norm >= 1:
            raise ParameterError(f"joint bound has ||T|| = {joint.norm:.6g} >= 1; Bose bound unavailable")
        upper = bose_xi_upper(joint.eigenvalues, p)
        method = "doubling+joint-T+polylog"
    else:
        upper = fermi_xi_upper(joint.eigenvalues, p)
        method = "doubling+joint-T+pauli-product"
    out = XiBounds(p, lower, upper, kind, method, real_lp, doubled_lp,
                   max(4.0, 2.0 ** (2.0 / p)), split.residual, joint)
    if not out.consistent:
        raise ContractViolation(f"sandwich inverted: lower {lower:.6g} > upper {upper:.6g}")
    return out


# ---------------------------------------------------------------------------
# brute-force checks


def fermi_algebra(H: StandardSubspace, fock: FermiFock) -> MatrixAlgebra:
    """Algebra generated by ``Phi[h]``, ``h`` in ``H``."""
    gens = [fermi_field(h, fock) for h in H.vectors().T]
    if not gens:
        return MatrixAlgebra([np.eye(fock.dim, dtype=complex) / math.sqrt(fock.dim)], fock.dim)
    return MatrixAlgebra.from_generators(gens)


def _selfadjoint_basis(alg: MatrixAlgebra) -> list[np.ndarray]:
    mats = []
    for b in alg.basis:
        mats.append(0.5 * (b + b.conj().T))
        mats.append(-0.5j * (b - b.conj().T))
    R = np.array([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in mats]).T
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    U = U[:, s > 1e-10 * s.max()]
    d = alg.d
    return [(U[: d * d, k] + 1j * U[d * d:, k]).reshape(d, d) for k in range(U.shape[1])]


@dataclass
class FermiOracle:
    values: np.ndarray  # u_n, n = 0, 1, ...
    restarts: int

    def lp(self, p: float) -> float:
        return lp_from_values(self.values, p)


def fermi_xi_oracle(H: StandardSubspace, X1, rng: np.random.Generator, restarts: int = 16,
                    max_rank: int | None = None) -> FermiOracle:
    """Estimates ``u_n = sup_U ||(1 - P_n) Gamma(X_1) U Omega||`` over unitaries of the algebra.

    ``P_n`` projects onto the top ``n`` left singular vectors of the map on
    the Hilbert-Schmidt normalised algebra basis. Since ``P_n Xi`` has rank
    at most ``n``, ``u_n`` bounds the ``(n+1)``-th approximation number from
    above; the supremum itself is approached from below by restarted local
    maximisation over ``U = exp(i sum theta_j s_j)``.
    """
    fock = FermiFock(H.n)
    G = second_quantize(X1, fock)
    alg = fermi_algebra(H, fock)
    omega = fock.vacuum()
    M = np.array([G @ b @ omega for b in alg.basis]).T
    Ul, s, _ = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-13 * max(s.max(initial=0.0), 1e-300)))
    top = rank if max_rank is None else min(rank, max_rank)
    sa = _selfadjoint_basis(alg)
    vals = []
    for n in range(top + 1):
        Pc = np.eye(fock.dim) - Ul[:, :n] @ Ul[:, :n].conj().T
        target = Pc @ G

        def neg(theta):
            K = sum(th * m for th, m in zip(theta, sa))
            v = target @ (expm(1j * K) @ omega)
            return -float(np.vdot(v, v).real)

        best = -neg(np.zeros(len(sa)))
        for _ in range(restarts):
            x0 = rng.uniform(-math.pi, math.pi, size=len(sa))
            res = minimize(neg, x0, method="L-BFGS-B")
            best = max(best, -res.fun)
        vals.append(math.sqrt(max(best, 0.0)))
    return FermiOracle(np.array(vals), restarts)


def bose_truncation_defect(H: StandardSubspace, X1, n_max: int = 12) -> float:
    """``max_h ||P_1 Gamma(X_1) W(h) Omega - i e^(-1/2) X_1 h||`` over a real orthonormal basis of ``H``."""
    fock = BoseFock(H.n, n_max)
    G = second_quantize(X1, fock)
    P1 = fock.one_particle()
    X1 = np.asarray(X1, dtype=complex)
    worst = 0.0
    for h in H.vectors().T:
        W = weyl_operator(h, fock).matrix
        v = P1.conj().T @ (G @ (W @ fock.vacuum()))
        worst = max(worst, float(np.linalg.norm(v - 1j * math.exp(-0.5) * (X1 @ h))))
    return worst


@dataclass
class FermiModularCheck:
    residual: float
    dim: int
    cyclic: bool


def fermi_modular_check(H: StandardSubspace) -> FermiModularCheck:
    """Compare the vacuum modular operator of ``{Phi[h] : h in H}''`` with ``Gamma(Delta_H)``."""
    td = tomita_data(H, require_standard=True)
    fock = FermiFock(H.n)
    alg = fermi_algebra(H, fock)
    omega = fock.vacuum()
    g = gns_construct(alg, np.outer(omega, omega.conj()))
    V = np.array([g.W.conj().T @ _vec(np.outer(e, omega.conj())) for e in np.eye(fock.dim)]).T
    cyclic = bool(np.allclose(V.conj().T @ V, np.eye(fock.dim), atol=1e-10))
    D = V.conj().T @ g.Delta @ V
    ref = second_quantize(td.Delta, fock)
    scale = max(1.0, float(np.abs(ref).max()))
    return FermiModularCheck(float(np.abs(D - ref).max()) / scale, g.dim, cyclic)
