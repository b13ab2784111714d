"""Free scalar field on a finite lattice: ground state, local projections,
compression defects and kernel decay of ``A^alpha``.

Real Cauchy data are pairs ``(phi, pi)`` of site functions. The ground
state uses ``mu_0 = 1/2 <phi, A^(1/2) phi> + 1/2 <pi, A^(-1/2) pi>`` with
``A = -Laplacian + m^2``. Computations run in the frame
``U(phi, pi) = (A^(1/4) phi, A^(-1/4) pi) / sqrt(2)``, where ``mu_0`` becomes
the Euclidean inner product and ``Sigma_0 = [[0, i], [-i, 0]]``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from .core import lp_from_values, lp_quasinorm, quasinorm_constant
from .errors import ConfigError, ParameterError, ShapeError
from .quasifree import QuasiFreeState, canonical_sigma
from .subspaces import StandardSubspace

TOPOLOGIES = ("chain", "circle", "grid2d", "torus2d")


@dataclass
class Lattice:
    topology: str
    sizes: tuple[int, ...]
    spacing: float = 1.0
    mass: float = 1.0
    weights: np.ndarray | None = None
    edges: list[tuple[int, int]] = field(init=False, repr=False)
    boundary: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        self.sizes = tuple(int(s) for s in np.atleast_1d(self.sizes))
        want = 1 if self.topology in ("chain", "circle") else 2
        if len(self.sizes) != want or min(self.sizes) < 1:
            raise ConfigError(f"{self.topology} needs {want} positive size(s), got {self.sizes}")
        if not self.spacing > 0:
            raise ConfigError("spacing must be positive")
        if not self.mass > 0:
            raise ConfigError("mass must be positive")
        self.edges, self.boundary = self._build_edges()
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.ndim == 0:
                w = np.full(len(self.edges), float(w))
            if w.shape != (len(self.edges),) or np.any(w <= 0):
                raise ConfigError(f"weights must be {len(self.edges)} positive numbers")
            self.weights = w

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.sizes))

    def coords(self, i: int) -> tuple[int, ...]:
        if len(self.sizes) == 1:
            return (i,)
        return divmod(i, self.sizes[1])

    def index(self, *c: int) -> int:
        if len(self.sizes) == 1:
            return c[0]
        return c[0] * self.sizes[1] + c[1]

    def _build_edges(self):
        edges = []
        n = self.n_sites
        boundary = np.zeros(n)
        if self.topology in ("chain", "circle"):
            N = self.sizes[0]
            for i in range(N - 1):
                edges.append((i, i + 1))
            if self.topology == "circle" and N > 1:
                edges.append((N - 1, 0))
            if self.topology == "chain":
                # Dirichlet: missing neighbours beyond the ends are held at zero
                boundary[0] += 1
                boundary[N - 1] += 1
        else:
            Nx, Ny = self.sizes
            periodic = self.topology == "torus2d"
            for x in range(Nx):
                for y in range(Ny):
                    i = self.index(x, y)
                    for dx, dy in ((1, 0), (0, 1)):
                        X, Y = x + dx, y + dy
                        size = Nx if dx else Ny
                        coord = X if dx else Y
                        if coord < size:
                            edges.append((i, self.index(X, Y)))
                        elif periodic:
                            if size > 1:
                                edges.append((i, self.index(X % Nx, Y % Ny)))
                        else:
                            boundary[i] += 1
                    if not periodic:
                        if x == 0:
                            boundary[i] += 1
                        if y == 0:
                            boundary[i] += 1
        return edges, boundary

    def laplacian(self) -> np.ndarray:
        """Positive graph Laplacian ``-Delta`` scaled by ``1/spacing^2``."""
        L = np.diag(self.boundary.astype(float))
        w = self.weights if self.weights is not None else np.ones(len(self.edges))
        for (i, j), wij in zip(self.edges, w):
            L[i, i] += wij
            L[j, j] += wij
            L[i, j] -= wij
            L[j, i] -= wij
        return L / self.spacing ** 2

    def hop_distance(self, i: int, j: int) -> int:
        a, b = self.coords(i), self.coords(j)
        periodic = self.topology in ("circle", "torus2d")
        d = 0
        for x, y, s in zip(a, b, self.sizes):
            k = abs(x - y)
            d += min(k, s - k) if periodic else k
        return d

    def set_distance(self, S: np.ndarray, T: np.ndarray) -> float:
        """Physical distance (hops times spacing) between two site sets."""
        return self.spacing * min(self.hop_distance(int(i), int(j)) for i in S for j in T)

    def neighbours(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out

    def margin(self, inner: np.ndarray, outer: np.ndarray) -> int:
        """Hop distance from ``inner`` to the complement of ``outer``."""
        outside = np.setdiff1d(np.arange(self.n_sites), outer)
        if outside.size == 0:
            return np.iinfo(np.int64).max
        dist = {int(i): 0 for i in inner}
        q = deque(dist)
        while q:
            i = q.popleft()
            for j in self.neighbours(i):
                if j not in dist:
                    dist[j] = dist[i] + 1
                    q.append(j)
        return min(dist.get(int(j), np.iinfo(np.int64).max) for j in outside)


def build_A(lat: Lattice) -> np.ndarray:
    """``A = -Delta + m^2`` as a dense symmetric matrix."""
    return lat.laplacian() + lat.mass ** 2 * np.eye(lat.n_sites)


def region(lat: Lattice, spec) -> np.ndarray:
    """Site indices from a region spec.

    Accepts a list of indices, ``{"start": a, "stop": b}`` (half open, 1-d)
    or ``{"box": [[x0, x1], [y0, y1]]}`` (half open, 2-d).
    """
    if isinstance(spec, dict):
        if "start" in spec:
            idx = np.arange(int(spec["start"]), int(spec["stop"]))
        elif "box" in spec:
            (x0, x1), (y0, y1) = spec["box"]
            idx = np.array([lat.index(x, y) for x in range(x0, x1) for y in range(y0, y1)])
        else:
            raise ConfigError(f"unrecognised region spec {spec!r}")
    else:
        idx = np.asarray(spec, dtype=int).ravel()
    if idx.size == 0:
        raise ConfigError("region is empty")
    if idx.min() < 0 or idx.max() >= lat.n_sites:
        raise ConfigError("region has sites outside the lattice")
    return np.unique(idx)


def check_pair(lat: Lattice, inner: np.ndarray, outer: np.ndarray) -> int:
    """Validate a nested pair of regions and return its margin in hops."""
    if not np.all(np.isin(inner, outer)):
        raise ParameterError("inner region is not contained in the outer region")
    if outer.size >= lat.n_sites:
        raise ParameterError("outer region must have a non-empty complement")
    return lat.margin(inner, outer)


@dataclass
class GroundState:
    lattice: Lattice
    A: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray

    def power(self, alpha: float) -> np.ndarray:
        if float(alpha) == 0.0:
            return np.eye(self.n)
        return (self.evecs * self.evals ** float(alpha)) @ self.evecs.T

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def mu0(self) -> np.ndarray:
        Z = np.zeros((self.n, self.n))
        return 0.5 * np.block([[self.power(0.5), Z], [Z, self.power(-0.5)]])

    @property
    def sigma(self) -> np.ndarray:
        return canonical_sigma(self.n)

    @property
    def Sigma0(self) -> np.ndarray:
        """``Sigma_0`` acting on data ``(phi, pi)``."""
        Z = np.zeros((self.n, self.n))
        return np.block([[Z, 1j * self.power(-0.5)], [-1j * self.power(0.5), Z]])

    @property
    def Sigma_frame(self) -> np.ndarray:
        I, Z = np.eye(self.n), np.zeros((self.n, self.n))
        return np.block([[Z, 1j * I], [-1j * I, Z]])

    @property
    def frame_map(self) -> np.ndarray:
        """``U``: data ``(phi, pi)`` to frame coordinates."""
        Z = np.zeros((self.n, self.n))
        return np.block([[self.power(0.25), Z], [Z, self.power(-0.25)]]) / np.sqrt(2)


def ground_state(lat: Lattice) -> GroundState:
    A = build_A(lat)
    w, V = np.linalg.eigh(A)
    if w.min() <= 0:
        raise ParameterError("A is not positive definite")
    return GroundState(lat, A, w, V)


def region_basis(gs: GroundState, sites: np.ndarray) -> np.ndarray:
    """Orthonormal frame basis of the complexified data supported in ``sites``."""
    top = orth(gs.power(0.25)[:, sites])
    bot = orth(gs.power(-0.25)[:, sites])
    Z1 = np.zeros((gs.n, bot.shape[1]))
    Z2 = np.zeros((gs.n, top.shape[1]))
    return np.block([[top, Z1], [Z2, bot]])


def region_projection(gs: GroundState, sites: np.ndarray) -> np.ndarray:
    Q = region_basis(gs, sites)
    return Q @ Q.T


def compressed_sigma(gs: GroundState, sites: np.ndarray) -> np.ndarray:
    P = region_projection(gs, sites)
    return P @ gs.Sigma_frame @ P


@dataclass
class DefectSpectrum:
    values: np.ndarray
    margin: int
    identity_residual: float

    def fit(self, k_range: tuple[int, int] = (1, 15)) -> tuple[float, float, float]:
        """Least-squares line through ``log s_k`` on the 1-based range; (slope, intercept, R^2)."""
        k = np.arange(k_range[0], k_range[1] + 1)
        s = self.values[k - 1]
        if np.any(s <= 0):
            return np.nan, np.nan, np.nan
        y = np.log(s)
        slope, icpt = np.polyfit(k, y, 1)
        resid = y - (slope * k + icpt)
        r2 = 1 - np.sum(resid ** 2) / np.sum((y - y.mean()) ** 2)
        return float(slope), float(icpt), float(r2)


def defect_spectrum(gs: GroundState, inner: np.ndarray, outer: np.ndarray,
                    identity_check: bool = True) -> DefectSpectrum:
    """Singular values of ``P_inner (1 - Sigma_outer^2) P_inner``, descending.

    Uses ``P_inner (1 - Sigma_V^2) P_inner = |(1 - P_V) Sigma P_inner|^2``; the
    singular values of ``(1 - P_V) Sigma Q_inner`` are computed from an explicit
    residual, so values far below machine epsilon relative to 1 are resolved.
    """
    margin = check_pair(gs.lattice, inner, outer)
    Qi = region_basis(gs, inner)
    Qo = region_basis(gs, outer)
    X = gs.Sigma_frame @ Qi
    R = X - Qo @ (Qo.conj().T @ X)
    s = np.linalg.svd(R, compute_uv=False) ** 2
    resid = 0.0
    if identity_check:
        Pi, Po = Qi @ Qi.T, Qo @ Qo.T
        S = gs.Sigma_frame
        SV = Po @ S @ Po
        lhs = Pi @ (np.eye(2 * gs.n) - SV @ SV) @ Pi
        rhs = Pi @ S @ (np.eye(2 * gs.n) - Po) @ S @ Pi
        resid = float(np.abs(lhs - rhs).max())
    return DefectSpectrum(np.sort(s)[::-1], margin, resid)


def to_quasifree(gs: GroundState, sites: np.ndarray, M: np.ndarray | None = None) -> QuasiFreeState:
    """Restriction of the ground state, or of the perturbation ``M`` of it, to ``sites``.

    The state is assembled in the region frame together with a factor ``R``
    of ``1 - Sigma_V^2``, built from the residual ``(1 - P_V) Sigma P_V``, so
    modes with ``|Sigma_V|`` close to 1 keep their relative accuracy.
    """
    sites = np.asarray(sites)
    idx = np.concatenate([sites, sites + gs.n])
    Q = region_basis(gs, sites)
    if Q.shape[1] != idx.size:
        raise ParameterError("region data are linearly dependent")
    S = gs.Sigma_frame
    SQ = S @ Q
    SV = Q.T @ SQ
    R = SQ - Q @ SV
    coframe = Q.T @ gs.frame_map[:, idx]
    mu = gs.mu0 if M is None else perturbed_mu(gs, M)
    if M is not None:
        w, V = np.linalg.eigh(Q.T @ M @ Q)
        if w.min() < 1 - 1e-12:
            raise ParameterError("perturbation must satisfy M >= 1")
        w = np.clip(w, 1.0, None)
        Mh = (V * np.sqrt(w)) @ V.T
        Mmh = (V / np.sqrt(w)) @ V.T
        R = np.vstack([(V * np.sqrt(w - 1)) @ V.T, R, ((V * np.sqrt(1 - 1 / w)) @ V.T) @ SV]) @ Mmh
        SV = Mmh @ SV @ Mmh
        coframe = Mh @ coframe
    SV = 0.5 * (SV + SV.conj().T)
    mu_V = mu[np.ix_(idx, idx)]
    return QuasiFreeState(mu_V, canonical_sigma(len(sites)), np.linalg.inv(coframe), coframe, SV,
                          defect_factor=R)


def data_embedding(gs: GroundState, outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Real data vectors of the inner region, in the data coordinates of the outer region."""
    pos = {int(s): k for k, s in enumerate(outer)}
    m = len(outer)
    F = np.zeros((2 * m, 2 * len(inner)))
    for j, s in enumerate(inner):
        F[pos[int(s)], j] = 1.0
        F[m + pos[int(s)], len(inner) + j] = 1.0
    return F


def time_zero_subspace(gs: GroundState, sites: np.ndarray) -> StandardSubspace:
    """One-particle real subspace ``{(A^(1/4) phi + i A^(-1/4) pi)/sqrt(2)}`` of data in ``sites``."""
    V = np.hstack([gs.power(0.25)[:, sites], 1j * gs.power(-0.25)[:, sites]]) / np.sqrt(2)
    return StandardSubspace.from_vectors(V)


# ---------------------------------------------------------------------------
# kernel decay


def bound_shape(alpha: float, m: float, delta: np.ndarray) -> np.ndarray:
    """``m^(-3/2) delta^(-alpha-1) (1 + |alpha(alpha+1)|/(2 m delta))`` without the exponential."""
    delta = np.asarray(delta, dtype=float)
    return m ** -1.5 * delta ** (-alpha - 1) * (1 + abs(alpha * (alpha + 1)) / (2 * m * delta))


@dataclass
class DecayRow:
    separation: float
    norm: float
    bound_rhs: float


def offdiagonal_norm(gs: GroundState, chi: np.ndarray, chi_t: np.ndarray, alpha: float) -> float:
    """``||chi A^alpha chi_t||`` for site functions ``chi``, ``chi_t``."""
    chi, chi_t = np.asarray(chi, float), np.asarray(chi_t, float)
    if chi.shape != (gs.n,) or chi_t.shape != (gs.n,):
        raise ShapeError("cutoff functions must be site vectors")
    M = chi[:, None] * gs.power(alpha) * chi_t[None, :]
    return float(np.linalg.norm(M, 2))


@dataclass
class DecaySweep:
    alpha: float
    mass: float
    rows: list[DecayRow]
    rate: float
    log_c: float


def decay_sweep(gs: GroundState, alpha: float, separations, anchor: int = 0) -> DecaySweep:
    """Measure ``||chi A^alpha chi_t||`` for single-site cutoffs at growing separation.

    The logarithm of norm over :func:`bound_shape` is fitted by a line in the
    physical separation; minus its slope is the measured decay rate and its
    intercept plays the role of ``log C(alpha)``.
    """
    lat = gs.lattice
    m = lat.mass
    seps, norms = [], []
    for k in separations:
        k = int(k)
        if lat.topology in ("chain", "circle"):
            j = anchor + k
        else:
            x, y = lat.coords(anchor)
            j = lat.index(x + k, y)
        if j >= lat.n_sites or lat.hop_distance(anchor, j) != k:
            raise ParameterError(f"separation {k} does not fit on the lattice")
        chi = np.zeros(gs.n)
        chi[anchor] = 1
        chi_t = np.zeros(gs.n)
        chi_t[j] = 1
        seps.append(k * lat.spacing)
        norms.append(offdiagonal_norm(gs, chi, chi_t, alpha))
    seps, norms = np.array(seps), np.array(norms)
    y = np.log(norms / bound_shape(alpha, m, seps))
    slope, icpt = np.polyfit(seps, y, 1)
    rhs = np.exp(icpt) * bound_shape(alpha, m, seps) * np.exp(slope * seps)
    rows = [DecayRow(float(s), float(n), float(r)) for s, n, r in zip(seps, norms, rhs)]
    return DecaySweep(float(alpha), float(m), rows, float(-slope), float(icpt))


# ---------------------------------------------------------------------------
# perturbed states


@dataclass
class PerturbationCheck:
    p: float
    lhs: float
    rhs: float
    rhs_printed: float
    identity_residual: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-300


def perturbation_operator(gs: GroundState, psis: np.ndarray, weights) -> np.ndarray:
    """``M = 1 + sum_k w_k P_k`` in the frame, ``P_k`` projecting onto real data ``psi_k``."""
    psis = np.atleast_2d(np.asarray(psis, dtype=float))
    if psis.shape[0] != 2 * gs.n:
        psis = psis.T
    if psis.shape[0] != 2 * gs.n:
        raise ShapeError("perturbation vectors must be data vectors of length 2N")
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if w.size != psis.shape[1] or np.any(w < 0):
        raise ParameterError("need one non-negative weight per perturbation vector")
    U = gs.frame_map
    M = np.eye(2 * gs.n)
    for k in range(psis.shape[1]):
        v = U @ psis[:, k]
        M += w[k] * np.outer(v, v) / (v @ v)
    return M


def perturbed_mu(gs: GroundState, M: np.ndarray) -> np.ndarray:
    """Data form of ``mu(f1, f2) = mu_0(f1, M f2)``."""
    U = gs.frame_map
    return U.T @ M @ U


def perturbation_check(gs: GroundState, M: np.ndarray, inner: np.ndarray, outer: np.ndarray,
                       p: float) -> PerturbationCheck:
    """Bound the compression defect of a perturbed state by that of the ground state.

    In the frame of the outer region, ``M_V = P_V M P_V``,
    ``Sigma_mu,V = M_V^(-1/2) Sigma_0,V M_V^(-1/2)`` and the inner projection for
    ``mu`` is onto the range of ``M_V^(1/2) P_0,inner``.
    """
    check_pair(gs.lattice, inner, outer)
    Qo = region_basis(gs, outer)
    Qi = region_basis(gs, inner)
    MV = Qo.T @ M @ Qo
    w, V = np.linalg.eigh(MV)
    if w.min() <= 0:
        raise ParameterError("perturbation is not positive on the region")
    Mh = (V * np.sqrt(w)) @ V.T
    Mmh = (V / np.sqrt(w)) @ V.T
    S0 = Qo.conj().T @ gs.Sigma_frame @ Qo
    Smu = Mmh @ S0 @ Mmh
    P0i = Qo.T @ Qi  # inner region in outer coordinates
    Pmu = orth(Mh @ P0i)
    I = np.eye(MV.shape[0])
    lhs_op = Pmu.conj().T @ (I - Smu @ Smu) @ Pmu
    lhs = lp_from_values(np.clip(np.linalg.eigvalsh(lhs_op), 0, None), p)
    d0 = P0i @ P0i.T @ (I - S0 @ S0) @ P0i @ P0i.T
    d0_vals = np.clip(np.linalg.eigvalsh(0.5 * (d0 + d0.conj().T)), 0, None)
    k = quasinorm_constant(p) ** 2
    inv_norm = 1.0 / w.min()
    norm_inv = 1.0 / w.max()
    mv1 = lp_quasinorm(MV - I, p)
    d0p = lp_from_values(d0_vals, p)
    rhs = k * inv_norm * ((1 + inv_norm) * mv1 + d0p)
    printed = k * norm_inv * ((1 + norm_inv) * mv1 + d0p)
    # identity: 1 - Sigma_mu^2 = M^-1/2 {(M-1) + (1 - S0^2) + S0 (1 - M^-1) S0} M^-1/2
    Minv = (V / w) @ V.T
    mid = (MV - I) + (I - S0 @ S0) + S0 @ (I - Minv) @ S0
    resid = float(np.abs((I - Smu @ Smu) - Mmh @ mid @ Mmh).max())
    return PerturbationCheck(float(p), lhs, rhs, printed, resid)
