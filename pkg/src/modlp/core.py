"""Approximation numbers, l^p quasi-norms, real-linear operators and
functional calculus on finite-dimensional Hilbert spaces.

Complex-linear operators are plain ``numpy`` arrays. Real-linear operators
``Y v = L v + A conj(v)`` are carried by :class:`RealLinear`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import zeta

from .errors import NotPositiveError, ParameterError, ShapeError

KERNEL_RTOL = 1e-10


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-d operator, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ShapeError("operator has non-finite entries")
    return X


def _check_p(p: float, allow_inf: bool = True) -> float:
    p = float(p)
    if np.isnan(p) or p <= 0 or (np.isinf(p) and not allow_inf):
        raise ParameterError(f"exponent p must be positive, got {p}")
    return p


def approximation_numbers(X) -> np.ndarray:
    """Approximation numbers of a matrix, in descending order.

    On Hilbert spaces ``alpha_n(X)`` is the distance of ``X`` to the operators
    of rank at most ``n``, which by Eckart-Young equals the (n+1)-th singular
    value. The result has length ``min(X.shape)``.
    """
    X = _as_matrix(X)
    if X.size == 0:
        return np.zeros(0)
    return np.linalg.svd(X, compute_uv=False)


def lp_from_values(values, p: float) -> float:
    """``(sum a_n^p)^(1/p)`` for non-negative ``values``; ``p = inf`` gives the max."""
    p = _check_p(p)
    a = np.abs(np.asarray(values, dtype=float).ravel())
    if a.size == 0:
        return 0.0
    if np.isinf(p):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    # scale first so that tiny p does not underflow
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def _denoise(s: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # singular values at the rounding floor of the SVD are numerically zero;
    # left in, they dominate l^p sums for small p
    if s.size == 0:
        return s
    floor = 8 * np.finfo(float).eps * max(shape) * s[0]
    return np.where(s > floor, s, 0.0)


def lp_quasinorm(X, p: float) -> float:
    """l^p quasi-norm of the approximation numbers of a complex-linear ``X``."""
    X = _as_matrix(X)
    return lp_from_values(_denoise(approximation_numbers(X), X.shape), p)


def quasinorm_constant(p: float) -> float:
    """Constant ``k_p`` in ``||X1 + X2||_p <= k_p (||X1||_p + ||X2||_p)``."""
    p = _check_p(p)
    if np.isinf(p):
        return 2.0
    return max(2.0, 2.0 ** (2.0 / p - 1.0))


def composition_constant(p: float, q: float) -> tuple[float, float]:
    """Return ``(r, 2^(1/r))`` with ``1/r = 1/p + 1/q`` for the product bound."""
    p, q = _check_p(p), _check_p(q)
    inv = (0.0 if np.isinf(p) else 1.0 / p) + (0.0 if np.isinf(q) else 1.0 / q)
    if inv == 0:
        return np.inf, 1.0
    r = 1.0 / inv
    return r, 2.0 ** inv


# ---------------------------------------------------------------------------
# real-linear operators


def realify(Z: np.ndarray) -> np.ndarray:
    """Real 2n x 2m matrix of the complex-linear map ``Z`` (coordinates Re, Im)."""
    Z = np.asarray(Z, dtype=complex)
    return np.block([[Z.real, -Z.imag], [Z.imag, Z.real]])


def realify_conj(Z: np.ndarray) -> np.ndarray:
    """Real matrix of the antilinear map ``v -> Z conj(v)``."""
    Z = np.asarray(Z, dtype=complex)
    return np.block([[Z.real, Z.imag], [Z.imag, -Z.real]])


def to_real_vectors(V: np.ndarray) -> np.ndarray:
    """Stack complex column vectors as real vectors ``[Re; Im]``."""
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    return np.vstack([V.real, V.imag])


def to_complex_vectors(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    n = R.shape[0] // 2
    return R[:n] + 1j * R[n:]


def imag_unit(n: int) -> np.ndarray:
    """Real matrix of multiplication by ``i`` on C^n."""
    return realify(1j * np.eye(n))


@dataclass
class RealLinear:
    """Real-linear map ``v -> lin @ v + anti @ conj(v)``.

    ``lin`` and ``anti`` are the complex-linear and antilinear parts
    ``Y^L = (Y - iYi)/2`` and ``Y^A = (Y + iYi)/2`` composed with conjugation.
    """

    lin: np.ndarray
    anti: np.ndarray

    # let ``ndarray @ RealLinear`` dispatch to __rmatmul__
    __array_ufunc__ = None

    def __post_init__(self):
        self.lin = np.asarray(self.lin, dtype=complex)
        self.anti = np.asarray(self.anti, dtype=complex)
        if self.lin.shape != self.anti.shape or self.lin.ndim != 2:
            raise ShapeError("linear and antilinear parts must be matrices of equal shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.lin.shape

    @classmethod
    def linear(cls, Z) -> "RealLinear":
        Z = np.asarray(Z, dtype=complex)
        return cls(Z, np.zeros_like(Z))

    @classmethod
    def antilinear(cls, Z) -> "RealLinear":
        Z = np.asarray(Z, dtype=complex)
        return cls(np.zeros_like(Z), Z)

    @classmethod
    def from_real(cls, R) -> "RealLinear":
        """Split a real 2n x 2m matrix into its complex-linear and antilinear parts."""
        R = np.asarray(R, dtype=float)
        if R.ndim != 2 or R.shape[0] % 2 or R.shape[1] % 2:
            raise ShapeError(f"real representation must be 2n x 2m, got {R.shape}")
        n, m = R.shape[0] // 2, R.shape[1] // 2
        Jn, Jm = imag_unit(n), imag_unit(m)
        Lr = 0.5 * (R - Jn @ R @ Jm)
        Ar = 0.5 * (R + Jn @ R @ Jm)
        lin = Lr[:n, :m] + 1j * Lr[n:, :m]
        anti = Ar[:n, :m] + 1j * Ar[n:, :m]
        return cls(lin, anti)

    def real_matrix(self) -> np.ndarray:
        return realify(self.lin) + realify_conj(self.anti)

    def __call__(self, v):
        v = np.asarray(v, dtype=complex)
        return self.lin @ v + self.anti @ np.conj(v)

    def __matmul__(self, other):
        if isinstance(other, RealLinear):
            lin = self.lin @ other.lin + self.anti @ np.conj(other.anti)
            anti = self.lin @ other.anti + self.anti @ np.conj(other.lin)
            return RealLinear(lin, anti)
        other = np.asarray(other, dtype=complex)
        return RealLinear(self.lin @ other, self.anti @ np.conj(other))

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=complex)
        return RealLinear(other @ self.lin, other @ self.anti)

    def __add__(self, other: "RealLinear") -> "RealLinear":
        return RealLinear(self.lin + other.lin, self.anti + other.anti)

    def __sub__(self, other: "RealLinear") -> "RealLinear":
        return RealLinear(self.lin - other.lin, self.anti - other.anti)

    def __mul__(self, c: float) -> "RealLinear":
        c = float(c)
        return RealLinear(c * self.lin, c * self.anti)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(approximation_numbers(self.real_matrix())[0]) if self.lin.size else 0.0

    def singular_values(self) -> np.ndarray:
        return approximation_numbers(self.real_matrix())


def real_lp_quasinorm(Y, p: float) -> float:
    """l^p quasi-norm of a real-linear map.

    ``Y`` may be a :class:`RealLinear`, or a real matrix already in the
    ``[Re; Im]`` representation. Singular values of the real matrix coincide
    with those of the complexification of the map.
    """
    if isinstance(Y, RealLinear):
        R = Y.real_matrix()
    else:
        R = _as_matrix(Y)
        if np.iscomplexobj(R):
            raise ShapeError("complex matrix passed as a real representation; wrap it in RealLinear")
    return lp_from_values(_denoise(approximation_numbers(R), R.shape), p)


def split_real_linear(Y: RealLinear | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the complex-linear and antilinear parts of a real-linear map."""
    if not isinstance(Y, RealLinear):
        Y = RealLinear.from_real(Y)
    return Y.lin, Y.anti


# ---------------------------------------------------------------------------
# functional calculus


def _hermitian_spectrum(X, what: str = "operator") -> tuple[np.ndarray, np.ndarray, float]:
    X = _as_matrix(X)
    if X.shape[0] != X.shape[1]:
        raise ShapeError(f"{what} must be square, got {X.shape}")
    scale = max(float(np.abs(X).max()), 1.0) if X.size else 1.0
    if not np.allclose(X, X.conj().T, atol=1e-10 * scale, rtol=0):
        raise NotPositiveError(f"{what} is not self-adjoint")
    w, U = np.linalg.eigh(0.5 * (X + X.conj().T))
    return w, U, scale


def operator_function(X, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``f(X)`` for self-adjoint ``X`` by spectral decomposition."""
    w, U, _ = _hermitian_spectrum(X)
    return (U * f(w)) @ U.conj().T


def operator_power(X, alpha: float, rtol: float = KERNEL_RTOL) -> np.ndarray:
    """``X^alpha`` for positive semidefinite ``X``.

    Eigenvalues below ``rtol * max eigenvalue`` are treated as kernel and sent
    to 0 for every ``alpha``, including ``alpha <= 0``.
    """
    w, U, _ = _hermitian_spectrum(X)
    if w.size == 0:
        return np.zeros_like(X, dtype=complex)
    top = max(float(w.max()), 0.0)
    if w.min() < -rtol * max(top, 1.0):
        raise NotPositiveError(f"operator has negative eigenvalue {w.min():.3e}")
    keep = w > rtol * top if top > 0 else np.zeros_like(w, dtype=bool)
    vals = np.zeros_like(w)
    vals[keep] = w[keep] ** float(alpha)
    out = (U * vals) @ U.conj().T
    if np.isrealobj(X):
        out = out.real
    return out


def loewner_gap(f: Callable[[np.ndarray], np.ndarray], A, B) -> float:
    """Smallest eigenvalue of ``f(B) - f(A)``.

    Operator monotonicity of ``f`` on this pair means the value is >= 0 up
    to rounding whenever ``A <= B``.
    """
    A, B = _as_matrix(A), _as_matrix(B)
    if A.shape != B.shape:
        raise ShapeError("Loewner pair must have equal shapes")
    gap = np.linalg.eigvalsh(0.5 * ((B - A) + (B - A).conj().T))
    if gap.min() < -1e-10 * max(1.0, float(np.abs(B).max())):
        raise NotPositiveError("pair is not ordered: B - A has a negative eigenvalue")
    D = operator_function(B, f) - operator_function(A, f)
    return float(np.linalg.eigvalsh(0.5 * (D + D.conj().T)).min())


def random_ordered_pair(rng: np.random.Generator, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Random positive pair ``A <= B`` of size ``dim``."""
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    A = G @ G.conj().T / dim
    B = A + H @ H.conj().T / dim * rng.uniform(0.05, 1.0)
    return A, B


def loewner_sweep(f, rng: np.random.Generator, n_pairs: int = 1000, dim: int = 4,
                  tol: float = 1e-10) -> dict:
    """Count Loewner-order violations of ``f`` on random ordered pairs."""
    gaps = np.array([loewner_gap(f, *random_ordered_pair(rng, dim)) for _ in range(n_pairs)])
    return {
        "pairs": int(n_pairs),
        "violations": int(np.sum(gaps < -tol)),
        "min_gap": float(gaps.min()) if gaps.size else 0.0,
    }


# ---------------------------------------------------------------------------
# p-nuclear sandwich


def nuclear_constant(p: float) -> float:
    """``c_p = 2^(2 + 3/p)`` bounding the p-nuclear norm by the l^p quasi-norm."""
    p = _check_p(p, allow_inf=False)
    if p > 1:
        raise ParameterError("nuclear comparison needs 0 < p <= 1")
    return 2.0 ** (2.0 + 3.0 / p)


def nuclear_to_lq_constant(p: float, q: float) -> float:
    """Constant ``c_{p,q}`` with ``||X||_q <= c_{p,q} nu_p(X)`` for ``q > p/(1-p)``."""
    p = _check_p(p, allow_inf=False)
    q = _check_p(q)
    if p > 1:
        raise ParameterError("nuclear comparison needs 0 < p <= 1")
    if p == 1:
        if not np.isinf(q):
            raise ParameterError("for p = 1 only q = inf is admissible")
        return 1.0
    if np.isinf(q):
        return 1.0
    if q <= p / (1 - p):
        raise ParameterError(f"q must exceed p/(1-p) = {p / (1 - p):.6g}")
    s = q * (1.0 / p - 1.0)
    return float((1.0 + (p / (1.0 - p)) ** q * zeta(s)) ** (1.0 / q))


@dataclass
class NuclearSandwich:
    p: float
    q: float
    lp: float
    nuclear_upper: float
    lq: float
    c_pq: float

    @property
    def consistent(self) -> bool:
        return self.lq <= self.c_pq * self.nuclear_upper * (1 + 1e-12)


def pnuclear_sandwich(X, p: float, q: float) -> NuclearSandwich:
    """Bracket the p-nuclear norm of a Hilbert-space map by l^p and l^q quasi-norms."""
    s = approximation_numbers(X)
    cp = nuclear_constant(p)
    cpq = nuclear_to_lq_constant(p, q)
    s = _denoise(s, np.shape(X))
    lp = lp_from_values(s, p)
    return NuclearSandwich(p, q, lp, cp * lp, lp_from_values(s, q), cpq)
