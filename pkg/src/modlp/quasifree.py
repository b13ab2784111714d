"""Quasi-free states of the Weyl algebra over a finite-dimensional
symplectic space, their one-particle structure and local modular operator.

A state is fixed by a real symmetric ``mu`` dominating the symplectic form
``sigma`` on real data ``f in R^(2n)``. After passing to a ``mu``-orthonormal
frame, the one-particle space is ``K = C^r`` and ``Sigma`` is the Hermitian
matrix with ``mu(f1, Sigma f2) = (i/2) sigma(f1, f2)``. Real data remain real
in this frame, so complex conjugation on ``K`` is the conjugation fixing the
real data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    approximation_numbers,
    lp_from_values,
    lp_quasinorm,
    operator_power,
)
from .errors import DominationError, NotPositiveError, ParameterError, ShapeError

KERNEL_RTOL = 1e-10
BOUNDARY_TOL = 1e-9
LOCAL_FLOOR = 1e-11


@dataclass
class QuasiFreeState:
    mu: np.ndarray
    sigma: np.ndarray
    frame: np.ndarray  # 2n x r, columns are a mu-orthonormal basis of data
    coframe: np.ndarray  # r x 2n, data -> frame coordinates
    Sigma: np.ndarray
    # optional R with R^* R = 1 - Sigma^2, used to resolve nearly pure modes
    defect_factor: np.ndarray | None = field(default=None, repr=False)
    _spectrum: Spectrum | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.Sigma.shape[0]

    def coordinates(self, F: np.ndarray) -> np.ndarray:
        """Frame coordinates of real data vectors (columns of ``F``)."""
        F = np.asarray(F)
        if F.ndim == 1:
            F = F[:, None]
        if F.shape[0] != self.mu.shape[0]:
            raise ShapeError(f"data vectors must have length {self.mu.shape[0]}")
        return self.coframe @ F

    def spectral_data(self) -> Spectrum:
        """Eigen-decomposition with exact pairing ``(s, v) <-> (-s, conj(v))``.

        ``Sigma`` is imaginary Hermitian, so its spectrum is symmetric; pairing
        the computed halves keeps spectral functions of ``Sigma`` exactly
        covariant under complex conjugation. With a defect factor the
        quantities ``1 -+ s`` are obtained without cancellation.
        """
        if self._spectrum is None:
            if self.defect_factor is None:
                s, V = _paired_eigh(self.Sigma)
                self._spectrum = Spectrum(s, V, np.clip(1 - s, 0, 2), np.clip(1 + s, 0, 2))
            else:
                self._spectrum = _defect_eigh(self.Sigma, self.defect_factor)
        return self._spectrum

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        sp = self.spectral_data()
        return sp.s, sp.V

    def boundary_projection(self) -> np.ndarray:
        """Projection ``R`` onto ``ker(1 - |Sigma|)``."""
        sp = self.spectral_data()
        B = sp.V[:, sp.boundary]
        return B @ B.conj().T

    def weyl_expectation(self, f: np.ndarray) -> float:
        f = np.asarray(f, dtype=float)
        return float(np.exp(-0.5 * f @ self.mu @ f))


@dataclass
class Spectrum:
    """Eigenvalues ``s``, eigenvectors ``V`` and the factors ``1 - s``, ``1 + s``."""

    s: np.ndarray
    V: np.ndarray
    om: np.ndarray
    op: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return np.minimum(self.om, self.op) <= BOUNDARY_TOL

    def apply(self, vals: np.ndarray) -> np.ndarray:
        return (self.V * vals) @ self.V.conj().T


def _defect_eigh(Sigma: np.ndarray, R: np.ndarray, tol: float = 64 * np.finfo(float).eps) -> Spectrum:
    """Paired spectrum driven by the singular values of ``R``.

    ``R^* R = 1 - Sigma^2`` is real, so its right singular vectors can be taken
    real. Each cluster of equal singular values is invariant under ``Sigma``;
    diagonalising ``Sigma`` there fixes the signs, and the defect ``1 - s^2`` is
    read off the singular values instead of ``s``.
    """
    r = Sigma.shape[0]
    R = np.asarray(R)
    Rr = np.vstack([R.real, R.imag]) if np.iscomplexobj(R) else R
    if Rr.shape[1] != r:
        raise ShapeError("defect factor must have as many columns as Sigma")
    if r == 0:
        z = np.zeros(0)
        return Spectrum(z, np.zeros((0, 0), dtype=complex), z, z)
    _, sv, Wt = np.linalg.svd(Rr, full_matrices=True)
    sig = np.zeros(r)
    sig[: sv.size] = sv[:r]
    W = Wt.T
    cut = tol * max(1.0, float(sig.max()))
    parts = []
    i = 0
    while i < r:
        j = i + 1
        while j < r and sig[j - 1] - sig[j] <= cut:
            j += 1
        Wc = W[:, i:j]
        t, Y = _paired_eigh(Wc.T @ Sigma @ Wc)
        g2 = np.clip(np.einsum("ki,k->i", np.abs(Y) ** 2, sig[i:j] ** 2), 0.0, 1.0)
        a = np.sqrt(1.0 - g2)
        big, small = 1.0 + a, g2 / (1.0 + a)
        sign = np.sign(t)
        om = np.where(sign > 0, small, np.where(sign < 0, big, 1.0))
        op = np.where(sign > 0, big, np.where(sign < 0, small, 1.0))
        parts.append((sign * a, Wc @ Y, om, op))
        i = j
    s, V, om, op = (np.concatenate(x, axis=-1) for x in zip(*parts))
    return Spectrum(s, V, om, op)


def _paired_eigh(Sigma: np.ndarray, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    r = Sigma.shape[0]
    if r == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    s, V = np.linalg.eigh(0.5 * (Sigma + Sigma.conj().T))
    pos = s > tol
    sp, Vp = s[pos], V[:, pos]
    pair = np.hstack([Vp, np.conj(Vp)])
    if pair.shape[1] < r:
        # real orthonormal basis of the conjugation-invariant kernel block
        rest = V[:, ~pos] - pair @ (pair.conj().T @ V[:, ~pos])
        R = np.hstack([rest.real, rest.imag])
        U, sv, _ = np.linalg.svd(R, full_matrices=False)
        Z = U[:, : r - pair.shape[1]].astype(complex)
    else:
        Z = np.zeros((r, 0), dtype=complex)
    vals = np.concatenate([np.clip(sp, -1.0, 1.0), -np.clip(sp, -1.0, 1.0), np.zeros(Z.shape[1])])
    return vals, np.hstack([pair, Z])


def build_quasifree(mu, sigma, tol: float = 1e-8) -> QuasiFreeState:
    """Validate ``(mu, sigma)`` and construct the one-particle data."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if mu.ndim != 2 or mu.shape[0] != mu.shape[1] or mu.shape != sigma.shape:
        raise ShapeError("mu and sigma must be square matrices of equal size")
    if mu.shape[0] % 2:
        raise ShapeError("phase space must have even dimension")
    scale = max(1.0, float(np.abs(mu).max()))
    if not np.allclose(mu, mu.T, atol=1e-12 * scale):
        raise ShapeError("mu is not symmetric")
    if not np.allclose(sigma, -sigma.T, atol=1e-12 * max(1.0, float(np.abs(sigma).max()))):
        raise ShapeError("sigma is not antisymmetric")
    m, O = np.linalg.eigh(0.5 * (mu + mu.T))
    if m.min() < -KERNEL_RTOL * max(m.max(), 1.0):
        raise NotPositiveError("mu is not positive semidefinite")
    keep = m > KERNEL_RTOL * max(m.max(), 0.0)
    null = O[:, ~keep]
    if null.shape[1] and np.abs(sigma @ null).max() > tol * max(1.0, float(np.abs(sigma).max())):
        raise DominationError("sigma does not vanish on the null space of mu")
    frame = O[:, keep] / np.sqrt(m[keep])
    coframe = (O[:, keep] * np.sqrt(m[keep])).T
    sig = frame.T @ sigma @ frame
    Sigma = 0.5j * sig
    Sigma = 0.5 * (Sigma + Sigma.conj().T)
    norm = float(np.abs(np.linalg.eigvalsh(Sigma)).max()) if Sigma.size else 0.0
    if norm > 1 + tol:
        raise DominationError(f"mu does not dominate sigma: ||Sigma|| = {norm:.6g} > 1")
    return QuasiFreeState(mu, sigma, frame, coframe, Sigma)


def modular_from_sigma(state: QuasiFreeState, h: Callable[[np.ndarray], np.ndarray] | str) -> np.ndarray:
    """``h(d)`` for ``d = (1 - Sigma)/(1 + Sigma)`` on the complement of ``R``.

    ``h`` is applied to the strictly positive spectrum of ``d``; the block
    where ``|Sigma| = 1`` is mapped to 0. ``h = "log"`` returns the modular
    generator.
    """
    if isinstance(h, str):
        if h != "log":
            raise ParameterError(f"unknown spectral function {h!r}")
        h = np.log
    sp = state.spectral_data()
    inner = ~sp.boundary
    vals = np.zeros_like(sp.s)
    vals[inner] = h(sp.om[inner] / sp.op[inner])
    return sp.apply(vals)


def _power_zero(x: np.ndarray, a: float) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > KERNEL_RTOL
    out[pos] = x[pos] ** a
    return out


def delta_power(state: QuasiFreeState, alpha: float) -> np.ndarray:
    """``d^alpha`` with ``0^alpha = 0``, acting on ``K``."""
    return modular_from_sigma(state, lambda x: x ** float(alpha))


def kappa(state: QuasiFreeState) -> np.ndarray:
    """``sqrt(1 + Sigma)``, mapping frame coordinates of real data into the
    one-particle space (identified with a subspace of ``K``)."""
    sp = state.spectral_data()
    return sp.apply(np.sqrt(sp.op))


def one_minus_sigma_sq(state: QuasiFreeState, alpha: float) -> np.ndarray:
    """``(1 - Sigma^2)^alpha``, zero on the same boundary block as :func:`delta_power`."""
    sp = state.spectral_data()
    vals = np.zeros_like(sp.s)
    inner = ~sp.boundary
    vals[inner] = (sp.om[inner] * sp.op[inner]) ** float(alpha)
    return sp.apply(vals)


def real_basis(state: QuasiFreeState, data: np.ndarray) -> np.ndarray:
    """Orthonormal (in ``mu``) real frame basis of the span of real data vectors."""
    data = np.asarray(data)
    if np.iscomplexobj(data):
        if np.abs(data.imag).max() > 1e-12:
            raise ParameterError("subspace must consist of real data vectors")
        data = data.real
    C = state.coordinates(data)
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    if s.size == 0 or s.max() == 0:
        return np.zeros((state.dim, 0))
    return U[:, s > 1e-10 * s.max()]


@dataclass
class ChainRow:
    check: str
    alpha: float
    p: float
    lhs: float
    rhs: float
    constant: float
    passed: bool


def c_alpha(alpha: float) -> float:
    """Lower-bound constant: ``2^(2 alpha)`` on ``(0, 1/4)``, else 1."""
    return 2.0 ** (2 * alpha) if 0 < alpha < 0.25 else 1.0


def upper_constant(alpha: float) -> float:
    """Constant in ``||delta^alpha|_H|| <= k ||(1 - Sigma^2)^alpha|_K||`` for ``alpha <= 1/4``.

    Equals ``2^(-2 alpha)`` for ``alpha < 0`` and 1 on ``[0, 1/4]``; at
    ``alpha = 1/4`` both sides coincide, so no smaller constant is possible.
    """
    if alpha > 0.25:
        raise ParameterError("upper comparison needs alpha <= 1/4")
    return 2.0 ** (-2 * alpha) if alpha < 0 else 1.0


@dataclass
class LocalMaps:
    """Realisation of ``delta^alpha`` on ``kappa(K_sub)`` and ``(1 - Sigma^2)^alpha`` on ``K_sub + i K_sub``."""

    state: QuasiFreeState
    basis: np.ndarray  # r x k real, orthonormal

    def delta_restricted(self, alpha: float) -> np.ndarray:
        """Real 2r x k matrix of ``f -> d^alpha sqrt(1 + Sigma) f`` on the subspace."""
        return self._delta(alpha)[1]

    def _delta(self, alpha: float) -> tuple[float, np.ndarray]:
        D = delta_power(self.state, alpha) @ kappa(self.state)
        Y = D @ self.basis
        return _norm2(D), np.vstack([Y.real, Y.imag])

    def delta_lp(self, alpha: float, p: float) -> float:
        scale, Y = self._delta(alpha)
        return _floored_lp(Y, p, scale)

    def sigma_lp(self, alpha: float, p: float) -> float:
        S = one_minus_sigma_sq(self.state, alpha)
        return _floored_lp(S @ self.basis, p, _norm2(S))

    def compressed_defect(self) -> np.ndarray:
        """``P (1 - Sigma^2) P`` on ``K_sub + i K_sub`` in the subspace basis."""
        B = self.basis
        return B.T @ one_minus_sigma_sq(self.state, 1.0) @ B


def _norm2(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2)) if X.size else 0.0


def _floored_lp(Y: np.ndarray, p: float, scale: float = 0.0) -> float:
    """l^p quasi-norm ignoring singular values below ``LOCAL_FLOOR`` times
    the larger of ``scale`` and the top singular value.

    ``scale`` is the norm of the unrestricted operator: rounding in the
    spectral calculus leaves spurious singular values at that scale times a
    small multiple of machine precision, and small ``p`` would amplify them.
    """
    s = np.linalg.svd(Y, compute_uv=False) if Y.size else np.zeros(0)
    if s.size:
        s = np.where(s > LOCAL_FLOOR * max(s[0], scale), s, 0.0)
    return lp_from_values(s, p)


def local_maps(state: QuasiFreeState, data: np.ndarray) -> LocalMaps:
    return LocalMaps(state, real_basis(state, data))


def deltamod_chain(state: QuasiFreeState, data: np.ndarray, alphas, ps, rtol: float = 1e-9) -> list[ChainRow]:
    """Evaluate the three comparisons between ``delta^alpha`` on ``kappa(K_sub)``
    and ``(1 - Sigma^2)^alpha`` on ``K_sub + i K_sub``.

    ``a``: symmetry ``alpha <-> 1/2 - alpha``; ``b``: lower bound with
    :func:`c_alpha`; ``c``: upper bound for ``alpha <= 1/4`` with
    :func:`upper_constant`.
    """
    lm = local_maps(state, data)
    rows = []
    for a in alphas:
        a = float(a)
        for p in ps:
            p = float(p)
            d_a = lm.delta_lp(a, p)
            d_sym = lm.delta_lp(0.5 - a, p)
            s_a = lm.sigma_lp(a, p)
            scale = max(d_a, d_sym, 1e-300)
            rows.append(ChainRow("a", a, p, d_a, d_sym, 1.0, abs(d_a - d_sym) <= rtol * scale))
            c = c_alpha(a)
            rows.append(ChainRow("b", a, p, s_a, c * d_a, c, s_a <= c * d_a * (1 + rtol) + 1e-300))
            if a <= 0.25:
                k = upper_constant(a)
                rows.append(ChainRow("c", a, p, d_a, k * s_a, k, d_a <= k * s_a * (1 + rtol) + 1e-300))
    return rows


def averaging_identity_residual(state: QuasiFreeState, data: np.ndarray, alpha: float) -> float:
    """Relative residual of the pointwise identity
    ``||delta^alpha kappa f||^2 = 1/2 ||((1+Sigma)^(1-4a) + (1-Sigma)^(1-4a))^(1/2) (1-Sigma^2)^a f||^2``."""
    lm = local_maps(state, data)
    Y = lm.delta_restricted(alpha)
    lhs = np.sum(Y ** 2, axis=0)
    q = 1 - 4 * alpha
    sp = state.spectral_data()
    mid = sp.apply(np.sqrt(_power_zero(sp.op, q) + _power_zero(sp.om, q)))
    Z = mid @ one_minus_sigma_sq(state, alpha) @ lm.basis
    rhs = 0.5 * np.sum(np.abs(Z) ** 2, axis=0)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, rhs))) if lhs.size else 0.0


@dataclass
class NoAlphaCheck:
    alpha: float
    p: float
    n: int
    lhs: float
    rhs: float
    kind: str

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-14


def noalpha_check(X, P, alpha: float, p: float, n: int = 1) -> NoAlphaCheck:
    """``||X^alpha P||_{2^n p} <= ||X||^(alpha - 2^-n) ||P X P||_p^(2^-n)`` for ``alpha >= 2^-n``;
    for ``alpha <= 0`` the comparison ``||(1 - E_0) P||_p <= ||X^-alpha|| ||X^alpha P||_p``."""
    X = np.asarray(X)
    P = np.asarray(P)
    if alpha <= 0:
        Xa = operator_power(X, alpha)
        Xm = operator_power(X, -alpha)
        E = operator_power(X, 0.0)  # support projection 1 - E_0
        lhs = lp_quasinorm(E @ P, p)
        rhs = float(approximation_numbers(Xm)[0]) * lp_quasinorm(Xa @ P, p)
        return NoAlphaCheck(alpha, p, n, lhs, rhs, "kernel")
    if alpha < 2.0 ** (-n):
        raise ParameterError(f"alpha must be at least 2^-{n} = {2.0 ** -n}")
    lhs = lp_quasinorm(operator_power(X, alpha) @ P, 2 ** n * p)
    normX = float(approximation_numbers(X)[0])
    rhs = normX ** (alpha - 2.0 ** (-n)) * lp_quasinorm(P @ X @ P, p) ** (2.0 ** (-n))
    return NoAlphaCheck(alpha, p, n, lhs, rhs, "power")


def corollary_checks(state: QuasiFreeState, data: np.ndarray, p: float, alpha: float, n: int) -> list[ChainRow]:
    """Compression-defect bounds: ``||P(1-Sigma^2)P||_p^(1/2) <= ||delta^(1/4)|_H||_(2p)`` and,
    for ``2^-n <= alpha <= 1/4``, ``||delta^alpha|_H||_p <= k ||P(1-Sigma^2)P||_(2^-n p)^(2^-n)``."""
    lm = local_maps(state, data)
    D = lm.compressed_defect()
    dvals = np.linalg.eigvalsh(0.5 * (D + D.conj().T)) if D.size else np.zeros(0)
    dvals = np.clip(dvals, 0, None)
    rows = []
    lhs = lp_from_values(dvals, p) ** 0.5
    rhs = lm.delta_lp(0.25, 2 * p)
    rows.append(ChainRow("defect_lower", 0.25, p, lhs, rhs, 1.0, lhs <= rhs * (1 + 1e-9) + 1e-300))
    if not (2.0 ** (-n) <= alpha <= 0.25):
        raise ParameterError("need 2^-n <= alpha <= 1/4")
    k = upper_constant(alpha)
    lhs = lm.delta_lp(alpha, p)
    rhs = k * lp_from_values(dvals, 2.0 ** (-n) * p) ** (2.0 ** (-n))
    rows.append(ChainRow("defect_upper", alpha, p, lhs, rhs, k, lhs <= rhs * (1 + 1e-9) + 1e-300))
    return rows


def random_state(rng: np.random.Generator, modes: int, slack: float | None = None) -> QuasiFreeState:
    """Random quasi-free state on ``modes`` degrees of freedom with canonical ``sigma``."""
    n = modes
    sigma = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    G = rng.normal(size=(2 * n, 2 * n))
    mu0 = G @ G.T / (2 * n) + 0.05 * np.eye(2 * n)
    st = build_quasifree(mu0, sigma, tol=np.inf)
    top = float(np.abs(np.linalg.eigvalsh(st.Sigma)).max())
    slack = rng.uniform(1.0, 3.0) if slack is None else slack
    return build_quasifree(mu0 * top * slack, sigma)


def canonical_sigma(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
