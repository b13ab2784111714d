"""Acceptance suite: one function per criterion, shared by the CLI and the tests."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import core, fock, gns, lattice, quasifree, subspaces


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict[str, float] = field(default_factory=dict)
    runtime: float = 0.0
    budget: float | None = None
    checks_passed: bool | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in sorted(self.metrics.items()))
        return f"[{status}] criterion {self.number:2d} {self.name}: {shown} ({self.runtime:.2f}s)"


def _short(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.4g" % v


def _rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), number]))


def criterion_1(seed: int = 0) -> CriterionResult:
    """Singular values against the Eckart-Young truncation residual."""
    rng = _rng(seed, 1)
    worst = 0.0
    for _ in range(100):
        X = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        a = core.approximation_numbers(X)
        U, s, Vh = np.linalg.svd(X)
        for n in range(8):
            Xn = (U[:, :n] * s[:n]) @ Vh[:n]
            worst = max(worst, abs(a[n] - np.linalg.norm(X - Xn, 2)))
    return CriterionResult(1, "approximation numbers", worst <= 1e-10, {"max_abs_error": worst}, budget=5.0)


def criterion_2(seed: int = 0) -> CriterionResult:
    """``||X + Y||_p <= k_p (||X||_p + ||Y||_p)``."""
    rng = _rng(seed, 2)
    violations, worst_ratio = 0, 0.0
    for _ in range(500):
        X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        Y = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        Y *= 10.0 ** rng.uniform(-2, 2)
        for p in (0.5, 1.0, 2.0):
            lhs = core.lp_quasinorm(X + Y, p)
            rhs = core.quasinorm_constant(p) * (core.lp_quasinorm(X, p) + core.lp_quasinorm(Y, p))
            worst_ratio = max(worst_ratio, lhs / rhs)
            violations += lhs > rhs * (1 + 1e-12)
    return CriterionResult(2, "quasi-norm inequality", violations == 0,
                           {"violations": violations, "max_ratio": worst_ratio})


def criterion_3(seed: int = 0) -> CriterionResult:
    rng = _rng(seed, 3)
    metrics, ok = {}, True
    for beta in (0.1, 0.25, 0.5, 0.9):
        r = core.loewner_sweep(lambda x, b=beta: x ** b, rng, n_pairs=1000)
        metrics[f"violations_beta_{beta}"] = r["violations"]
        ok &= r["violations"] == 0
    sq = core.loewner_sweep(lambda x: x ** 2, rng, n_pairs=1000)
    metrics["violations_square"] = sq["violations"]
    ok &= sq["violations"] >= 1
    return CriterionResult(3, "Loewner monotonicity", bool(ok), metrics, budget=30.0)


def criterion_4(seed: int = 0) -> CriterionResult:
    rng = _rng(seed, 4)
    g = gns.gns_construct(gns.MatrixAlgebra.full(2), np.diag([2 / 3, 1 / 3]))
    spec = np.sort(np.linalg.eigvalsh(g.Delta))
    spec_err = float(np.abs(spec - np.array([0.5, 1.0, 1.0, 2.0])).max())
    res = gns.gns_residuals(g)
    big = gns.MatrixAlgebra.full(4)
    sub = gns.MatrixAlgebra.amplified(gns.MatrixAlgebra.full(2), 2)
    rho = gns.random_density(rng, 4)
    incl = [gns.inclusion_check(big, sub, rho, a, rng) for a in (0.0, 0.1, 0.25, 0.4, 0.5)]
    incl_ok = all(c.holds for c in incl)
    big3, sub3 = gns.MatrixAlgebra.full(3), gns.MatrixAlgebra.from_blocks([2, 1])
    mix_fail = 0
    for _ in range(20):
        r1 = float(rng.uniform(0.1, 0.9))
        alpha = float(rng.choice([0.1, 0.25, 0.4]))
        p = float(rng.choice([0.5, 1.0, 2.0]))
        c = gns.convex_mixture_check(big3, sub3, gns.random_density(rng, 3), gns.random_density(rng, 3), r1, alpha, p)
        mix_fail += not c.holds
    ok = spec_err <= 1e-10 and res["delta_Q"] <= 1e-10 and incl_ok and mix_fail == 0
    return CriterionResult(4, "GNS modular data", ok, {
        "spectrum_error": spec_err, "delta_Q_residual": res["delta_Q"],
        "inclusion_worst_slack": min(c.worst_slack for c in incl), "mixture_failures": mix_fail})


def criterion_5(seed: int = 0) -> CriterionResult:
    rng = _rng(seed, 5)
    worst_post, worst_split, worst_norm = 0.0, 0.0, 0.0
    for _ in range(100):
        V = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        H = subspaces.StandardSubspace.from_vectors(V)
        gamma = subspaces.construct_conjugation(H, check=False)
        worst_post = max(worst_post, max(gamma.report.values()))
        worst_split = max(worst_split, subspaces.gamma_split_subspace(H, gamma).residual)
        Tp, Tm = subspaces.commuting_pair(rng, gamma), subspaces.commuting_pair(rng, gamma)
        worst_norm = max(worst_norm, subspaces.tgamma_norm_check(gamma, Tp, Tm).norm_residual)
    ok = worst_post <= 1e-9 and worst_split <= 1e-9 and worst_norm <= 1e-12
    return CriterionResult(5, "conjugation construction", ok, {
        "postcondition_residual": worst_post, "split_residual": worst_split, "norm_residual": worst_norm})


def criterion_6(seed: int = 0) -> CriterionResult:
    rng = _rng(seed, 6)
    poly_err = max(abs(fock.polylog_series(1.0, x) - (1 - x) ** -2) for x in np.arange(1, 10) / 10)
    brute_err = 0.0
    for _ in range(20):
        t = rng.uniform(0, 0.3, size=2)
        p = float(rng.choice([0.5, 1.0, 2.0]))
        m = np.arange(41)
        f = [np.sum((m + 1.0) ** p * tl ** (p * m)) for tl in t]
        brute = (f[0] * f[1]) ** (1 / p)
        brute_err = max(brute_err, abs(fock.bose_xi_upper(t, p) - brute) / brute)
    exp_fail = 0
    for _ in range(100):
        t = rng.exponential(0.3, size=int(rng.integers(1, 8)))
        p = float(rng.uniform(0.2, 1.0))
        exp_fail += fock.fermi_xi_upper(t, p) > fock.fermi_xi_exp_bound(t, p) * (1 + 1e-12)
    ok = poly_err <= 1e-12 and brute_err <= 1e-9 and exp_fail == 0
    return CriterionResult(6, "polylog and product bounds", ok, {
        "polylog_error": poly_err, "bose_brute_rel_error": brute_err, "exp_bound_failures": exp_fail})


def _random_fermi_config(rng: np.random.Generator):
    n = int(rng.integers(1, 3))
    k = int(rng.integers(1, 2 * n + 1))
    V = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    H = subspaces.StandardSubspace.from_vectors(V)
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    X = Z @ Z.conj().T
    X *= rng.uniform(0.1, 0.9) / np.linalg.norm(X, 2)
    p = float(rng.choice([0.5, 1.0, 2.0]))
    return H, X, p


def criterion_7(seed: int = 0, n_configs: int = 50, restarts: int = 16) -> CriterionResult:
    rng = _rng(seed, 7)
    fermi_fail, worst_margin = 0, np.inf
    for _ in range(n_configs):
        H, X, p = _random_fermi_config(rng)
        b = fock.xi_sandwich(H, X, p, "fermi")
        o = fock.fermi_xi_oracle(H, X, rng, restarts=restarts).lp(p)
        fermi_fail += not (b.lower <= o * (1 + 1e-9) and o <= b.upper * (1 + 1e-9))
        worst_margin = min(worst_margin, o - b.lower, b.upper - o)
    bose_fail, worst_defect = 0, 0.0
    H = subspaces.StandardSubspace.from_vectors(np.array([[1.0]]))
    for t in (0.1, 0.2, 0.3, 0.4, 0.5):
        X = np.array([[t]])
        for p in (0.5, 1.0):
            b = fock.xi_sandwich(H, X, p, "bose")
            bose_fail += not b.consistent
        worst_defect = max(worst_defect, fock.bose_truncation_defect(H, X, 12))
    ok = fermi_fail == 0 and bose_fail == 0 and worst_defect <= 1e-6
    return CriterionResult(7, "Fock sandwich", ok, {
        "fermi_failures": fermi_fail, "fermi_worst_margin": float(worst_margin),
        "bose_failures": bose_fail, "bose_truncation_defect": worst_defect}, budget=180.0)


def criterion_8(seed: int = 0) -> CriterionResult:
    gs = lattice.ground_state(lattice.Lattice("chain", (200,), spacing=0.1, mass=1.0))
    inner, outer = np.arange(80, 120), np.arange(61, 139)
    d = lattice.defect_spectrum(gs, inner, outer)
    slope, _, r2 = d.fit((1, 15))
    ratio = float(d.values[9] / d.values[0])
    ok = ratio <= 1e-6 and slope < 0 and r2 >= 0.95 and d.margin == 20
    return CriterionResult(8, "lattice defect decay", bool(ok), {
        "s10_over_s1": ratio, "slope": slope, "r_squared": r2, "margin": d.margin}, budget=60.0)


def criterion_9(seed: int = 0) -> CriterionResult:
    rates = {}
    for m in (0.5, 1.0):
        gs = lattice.ground_state(lattice.Lattice("circle", (256,), mass=m))
        rates[m] = lattice.decay_sweep(gs, -0.5, [8, 16, 24, 32]).rate
    rel = {m: abs(r - m) / m for m, r in rates.items()}
    ok = all(v <= 0.3 for v in rel.values()) and rates[1.0] > rates[0.5]
    return CriterionResult(9, "off-diagonal decay rate", ok, {
        "rate_m0.5": rates[0.5], "rate_m1": rates[1.0],
        "rel_dev_m0.5": rel[0.5], "rel_dev_m1": rel[1.0]})


CHAIN_ALPHAS = (0.05, 0.1, 0.25)
CHAIN_PS = (0.5, 1.0, 2.0)


def chain_states(seed: int = 0) -> list[tuple[str, quasifree.QuasiFreeState, np.ndarray]]:
    """Random states with random real data subspaces, followed by lattice restrictions."""
    rng = _rng(seed, 10)
    out = []
    for k in range(50):
        modes = int(rng.integers(1, 5))
        st = quasifree.random_state(rng, modes)
        data = rng.normal(size=(2 * modes, int(rng.integers(1, 2 * modes + 1))))
        out.append((f"random_{k:02d}", st, data))
    for m in (0.5, 1.0):
        gs = lattice.ground_state(lattice.Lattice("chain", (30,), mass=m))
        outer, inner = np.arange(8, 22), np.arange(12, 18)
        emb = lattice.data_embedding(gs, outer, inner)
        out.append((f"lattice_m{m}", lattice.to_quasifree(gs, outer), emb))
        M = lattice.perturbation_operator(gs, rng.normal(size=(60, 2)), [0.5, 1.0])
        out.append((f"perturbed_m{m}", lattice.to_quasifree(gs, outer, M), emb))
    return out


def chain_rows(seed: int = 0) -> list[tuple[str, quasifree.ChainRow]]:
    rows = []
    for label, st, data in chain_states(seed):
        rows.extend((label, r) for r in quasifree.deltamod_chain(st, data, CHAIN_ALPHAS, CHAIN_PS))
    return rows


def criterion_10(seed: int = 0) -> CriterionResult:
    rows = chain_rows(seed)
    scored = [r for _, r in rows if not (r.check == "c" and r.alpha == 0.25)]
    boundary = [r for _, r in rows if r.check == "c" and r.alpha == 0.25]
    fails = sum(not r.passed for r in scored)
    return CriterionResult(10, "modular comparison chain", fails == 0, {
        "rows": len(scored), "violations": fails,
        "boundary_rows": len(boundary), "boundary_violations": sum(not r.passed for r in boundary)})


def criterion_11(seed: int = 0, workdir=None) -> CriterionResult:
    """Run the acceptance command twice (with different thread counts) and compare CSV bytes."""
    import contextlib
    import tempfile
    from io import StringIO
    from pathlib import Path

    from . import cli, io

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        tmp = Path(tmp)
        cfg = tmp / "config.json"
        io.write_json(cfg, {"criteria": [1, 2, 4, 6, 8, 9], "seed": seed})
        codes, outs = [], []
        for k, threads in enumerate((1, 2)):
            out = tmp / f"run{k}"
            with contextlib.redirect_stdout(StringIO()):
                codes.append(cli.main(["acceptance", "--config", str(cfg), "--out", str(out),
                                       "--seed", str(seed), "--threads", str(threads)]))
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same = outs[0] == outs[1] and len(outs[0]) > 0
    return CriterionResult(11, "determinism", bool(same and codes == [0, 0]), {
        "identical": same, "files": len(outs[0]), "exit_codes_zero": codes == [0, 0]})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    res = CRITERIA[number](seed)
    res.runtime = time.perf_counter() - start
    res.checks_passed = res.passed
    if res.budget is not None:
        res.metrics["within_budget"] = res.runtime <= res.budget
        res.passed = bool(res.passed and res.runtime <= res.budget)
    return res


def run_all(seed: int = 0, numbers=None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else sorted(numbers)
    return [run_criterion(n, seed) for n in numbers]


def summary_rows(results: list[CriterionResult]) -> list[tuple]:
    """Deterministic long-format rows; runtimes and budget flags are excluded."""
    rows = []
    for r in sorted(results, key=lambda r: r.number):
        for k in sorted(r.metrics):
            if k == "within_budget":
                continue
            v = r.metrics[k]
            rows.append((r.number, r.name, r.checks_passed, k, float(v) if not isinstance(v, (bool, np.bool_)) else bool(v)))
    return rows


def total_passed(results) -> bool:
    return all(r.passed for r in results)

