"""Command-line driver: ``modlp <command> --config <path> [--out] [--seed] [--threads]``."""

from __future__ import annotations

import argparse
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import acceptance, core, fock, gns, io, lattice, plotting, quasifree
from .errors import ConfigError, ContractViolation, InputError, ModlpError
from .subspaces import StandardSubspace

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CONTRACT = 0, 1, 2, 3


class Context:
    def __init__(self, config: dict[str, Any], out: Path, seed: int, threads: int):
        self.config = config
        self.out = out
        self.seed = seed
        self.threads = max(1, threads)
        self.hash = io.config_hash({"config": config, "seed": seed})

    def csv(self, name: str, header, rows) -> Path:
        return io.write_csv(self.out / name, header, rows, self.hash)

    def map(self, fn: Callable, items: list) -> list:
        """Apply ``fn`` to each item, in parallel when configured; order is preserved."""
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, *key]))


def _get(cfg: dict, key: str, default=None, required: bool = False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return cfg[key]


def _grid(cfg: dict, key: str, default) -> list[float]:
    vals = _get(cfg, key, default)
    if not isinstance(vals, (list, tuple)) or len(vals) == 0:
        raise ConfigError(f"{key!r} must be a non-empty list")
    return [float(v) for v in vals]


def _lattice(cfg: dict) -> lattice.Lattice:
    lc = _get(cfg, "lattice", required=True)
    if not isinstance(lc, dict):
        raise ConfigError("'lattice' must be a mapping")
    return lattice.Lattice(
        _get(lc, "topology", "chain"), tuple(_get(lc, "sizes", required=True)),
        float(_get(lc, "spacing", 1.0)), float(_get(lc, "mass", 1.0)), _get(lc, "weights"))


def _pairs(lat: lattice.Lattice, cfg: dict) -> list[tuple[np.ndarray, np.ndarray]]:
    pairs = _get(cfg, "pairs", required=True)
    if not isinstance(pairs, list) or not pairs:
        raise ConfigError("'pairs' must be a non-empty list of {inner, outer}")
    out = []
    for pc in pairs:
        inner = lattice.region(lat, _get(pc, "inner", required=True))
        outer = lattice.region(lat, _get(pc, "outer", required=True))
        lattice.check_pair(lat, inner, outer)
        out.append((inner, outer))
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_lattice_spectrum(ctx: Context) -> bool:
    cfg = ctx.config
    lat = _lattice(cfg)
    gs = lattice.ground_state(lat)
    ctx.csv("spectrum.csv", ["index", "eigenvalue"], enumerate(gs.evals))
    pairs = _pairs(lat, cfg)
    k_lo, k_hi = (int(k) for k in _get(cfg, "fit_range", [1, 15]))
    spectra = ctx.map(lambda pr: lattice.defect_spectrum(gs, *pr), pairs)
    rows, fits, series = [], [], {}
    for j, d in enumerate(spectra):
        for k, v in enumerate(d.values, start=1):
            rows.append((j, d.margin, k, v))
        hi = min(k_hi, int(np.sum(d.values > 0)))
        slope, icpt, r2 = d.fit((k_lo, hi)) if hi - k_lo >= 2 else (np.nan, np.nan, np.nan)
        fits.append((j, d.margin, k_lo, hi, slope, icpt, r2, d.identity_residual))
        series[f"pair {j} (margin {d.margin})"] = d.values[:max(hi, 1)]
    ctx.csv("defect_decay.csv", ["pair", "margin", "k", "singular_value"], rows)
    ctx.csv("defect_fit.csv", ["pair", "margin", "k_min", "k_max", "slope", "intercept", "r_squared",
                               "identity_residual"], fits)
    plotting.semilog_series(series, ctx.out / "decay.svg", "k", "singular value of compressed defect")
    off = _get(cfg, "offdiagonal")
    if off:
        alphas = _grid(off, "alphas", [-0.5])
        seps = [int(s) for s in _get(off, "separations", [8, 16, 24, 32])]
        sweeps = ctx.map(lambda a: lattice.decay_sweep(gs, a, seps, int(_get(off, "anchor", 0))), alphas)
        orows, oseries, ox = [], {}, {}
        for sw in sweeps:
            for r in sw.rows:
                orows.append((sw.alpha, sw.mass, r.separation, r.norm, r.bound_rhs, sw.rate, sw.log_c))
            oseries[f"alpha={sw.alpha:g}"] = [r.norm for r in sw.rows]
            ox[f"alpha={sw.alpha:g}"] = [r.separation for r in sw.rows]
        ctx.csv("offdiagonal_decay.csv", ["alpha", "mass", "separation", "norm", "fitted_bound", "rate",
                                          "log_c"], orows)
        plotting.semilog_series(oseries, ctx.out / "offdiagonal.svg", "separation", "kernel norm", x=ox)
    return True


def cmd_modular_decay(ctx: Context) -> bool:
    cfg = ctx.config
    alphas = _grid(cfg, "alphas", list(acceptance.CHAIN_ALPHAS))
    ps = _grid(cfg, "ps", list(acceptance.CHAIN_PS))
    jobs: list[tuple[str, quasifree.QuasiFreeState, np.ndarray]] = []
    if "lattice" in cfg:
        lat = _lattice(cfg)
        gs = lattice.ground_state(lat)
        for j, (inner, outer) in enumerate(_pairs(lat, cfg)):
            jobs.append((f"pair_{j}", lattice.to_quasifree(gs, outer), lattice.data_embedding(gs, outer, inner)))
    rs = _get(cfg, "random_states")
    if rs:
        rng = ctx.rng(10)
        for k in range(int(_get(rs, "count", 50))):
            modes = int(rng.integers(1, int(_get(rs, "max_modes", 4)) + 1))
            st = quasifree.random_state(rng, modes)
            jobs.append((f"random_{k:03d}", st, rng.normal(size=(2 * modes, int(rng.integers(1, 2 * modes + 1))))))
    if not jobs:
        raise ConfigError("modular-decay needs 'lattice' with 'pairs' or 'random_states'")
    results = ctx.map(lambda j: quasifree.deltamod_chain(j[1], j[2], alphas, ps), jobs)
    rows, ok = [], True
    for (label, _, _), chain in zip(jobs, results):
        for r in chain:
            rows.append((label, r.check, r.alpha, r.p, r.lhs, r.rhs, r.constant, r.passed))
            ok &= r.passed
    ctx.csv("deltamod_chain.csv", ["source", "check", "alpha", "p", "lhs", "rhs", "constant", "passed"], rows)
    return bool(ok)


def cmd_fock_sandwich(ctx: Context) -> bool:
    cfg = ctx.config
    configs = []
    for c in _get(cfg, "configs", []):
        kind = _get(c, "kind", "fermi")
        X = io.operator_from_json(_get(c, "X1", required=True))
        H = StandardSubspace.from_vectors(io.operator_from_json(_get(c, "H", required=True)))
        configs.append((kind, H, X, float(_get(c, "p", 1.0))))
    rnd = _get(cfg, "random")
    if rnd:
        rng = ctx.rng(7)
        for _ in range(int(_get(rnd, "count", 10))):
            H, X, p = acceptance._random_fermi_config(rng)
            configs.append(("fermi", H, X, p))
    if not configs:
        raise ConfigError("fock-sandwich needs 'configs' or 'random'")
    restarts = int(_get(cfg, "restarts", 16))
    oracle_on = bool(_get(cfg, "oracle", True))

    def job(item):
        k, (kind, H, X, p) = item
        b = fock.xi_sandwich(H, X, p, kind)
        o = None
        if kind == "fermi" and oracle_on:
            o = fock.fermi_xi_oracle(H, X, ctx.rng(7, 1000 + k), restarts=restarts).lp(p)
        return b, o, H.n

    results = ctx.map(job, list(enumerate(configs)))
    rows, ok = [], True
    for k, (b, o, n) in enumerate(results):
        inside = o is None or (b.lower <= o * (1 + 1e-9) and o <= b.upper * (1 + 1e-9))
        ok &= b.consistent and inside
        rows.append((k, b.kind, n, b.p, b.lower, b.upper, o, b.method, b.joint.norm, b.doubling_holds, inside))
    ctx.csv("xi_bounds.csv", ["id", "kind", "n", "p", "lower", "upper", "oracle", "method", "norm_T",
                              "doubling_holds", "oracle_inside"], rows)
    plotting.bounds_plot([str(r[0]) for r in rows], [r[4] for r in rows], [r[5] for r in rows],
                         [r[6] for r in rows], ctx.out / "xi_bounds.svg")
    return bool(ok)


def cmd_gns_verify(ctx: Context) -> bool:
    cfg = ctx.config
    blocks = [int(b) for b in _get(cfg, "blocks", [2])]
    alg = gns.MatrixAlgebra.from_blocks(blocks)
    if "rho" in cfg:
        rho = io.operator_from_json(cfg["rho"])
    else:
        rho = np.diag(np.asarray(_get(cfg, "rho_diag", required=True), dtype=float))
    g = gns.gns_construct(alg, rho)
    res = gns.gns_residuals(g)
    tol = float(_get(cfg, "tol", 1e-10))
    rows = [("residual", k, v) for k, v in sorted(res.items())]
    rows += [("modular_eigenvalue", str(i), v) for i, v in enumerate(np.sort(np.linalg.eigvalsh(g.Delta)))]
    rows += [("dimension", "gns", g.dim), ("flag", "standard", g.standard)]
    ctx.csv("gns_report.csv", ["kind", "name", "value"], rows)
    return all(v <= tol for v in res.values())


LOEWNER_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sqrt": np.sqrt,
    "log1p": np.log1p,
    "square": lambda x: x ** 2,
    "cube": lambda x: x ** 3,
    "exp": np.exp,
}


def _loewner_fn(name: str):
    if name in LOEWNER_FUNCS:
        return LOEWNER_FUNCS[name]
    if name.startswith("x^"):
        try:
            b = float(name[2:])
        except ValueError as exc:
            raise ConfigError(f"bad power function {name!r}") from exc
        return lambda x: x ** b
    raise ConfigError(f"unknown function {name!r}; use x^<beta> or one of {sorted(LOEWNER_FUNCS)}")


def cmd_loewner_sweep(ctx: Context) -> bool:
    cfg = ctx.config
    names = _get(cfg, "functions", ["x^0.1", "x^0.25", "x^0.5", "x^0.9", "square"])
    if not names:
        raise ConfigError("'functions' must be non-empty")
    trials = int(_get(cfg, "trials", 1000))
    dim = int(_get(cfg, "dim", 4))
    expected = _get(cfg, "expect_monotone", {})
    fns = [(k, n, _loewner_fn(n)) for k, n in enumerate(names)]
    res = ctx.map(lambda t: core.loewner_sweep(t[2], ctx.rng(3, t[0]), n_pairs=trials, dim=dim), fns)
    rows, ok = [], True
    for (_, name, _), r in zip(fns, res):
        rows.append((name, r["pairs"], r["violations"], r["min_gap"]))
        if name in expected:
            ok &= (r["violations"] == 0) == bool(expected[name])
    ctx.csv("loewner.csv", ["function", "pairs", "violations", "min_gap"], rows)
    return bool(ok)


def cmd_acceptance(ctx: Context) -> bool:
    numbers = [int(n) for n in _get(ctx.config, "criteria", sorted(acceptance.CRITERIA))]
    bad = [n for n in numbers if n not in acceptance.CRITERIA]
    if bad or not numbers:
        raise ConfigError(f"unknown criteria {bad}")
    results = ctx.map(lambda n: acceptance.run_criterion(n, ctx.seed), sorted(numbers))
    for r in results:
        print(r.line())
    ctx.csv("acceptance.csv", ["criterion", "name", "passed", "metric", "value"], acceptance.summary_rows(results))
    io.write_json(ctx.out / "runtimes.json", {
        str(r.number): {"runtime_s": round(r.runtime, 4), "budget_s": r.budget, "passed": r.passed}
        for r in results})
    return acceptance.total_passed(results)


COMMANDS: dict[str, Callable[[Context], bool]] = {
    "lattice-spectrum": cmd_lattice_spectrum,
    "modular-decay": cmd_modular_decay,
    "fock-sandwich": cmd_fock_sandwich,
    "gns-verify": cmd_gns_verify,
    "loewner-sweep": cmd_loewner_sweep,
    "acceptance": cmd_acceptance,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modlp", description="Modular l^p diagnostics for finite free fields.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON or YAML configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--seed", type=int, default=None, help="64-bit seed; overrides the config value")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return ap


def _write_error(out: Path, command: str, exc: BaseException, cfg_hash: str) -> None:
    kind = getattr(exc, "kind", type(exc).__name__)
    msg = str(exc).replace("\n", " ")
    try:
        io.write_csv(out / "errors.csv", ["command", "kind", "exception", "message"],
                     [(command, kind, type(exc).__name__, msg)], cfg_hash)
    except OSError:
        pass


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    cfg_hash = io.config_hash({})
    try:
        config = io.load_config(args.config)
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        ctx = Context(config, out, seed, args.threads)
        cfg_hash = ctx.hash
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
        ok = COMMANDS[args.command](ctx)
    except InputError as exc:
        print(f"modlp: input error: {exc}", file=sys.stderr)
        _write_error(out, args.command, exc, cfg_hash)
        return EXIT_INPUT
    except (ContractViolation, ModlpError) as exc:
        print(f"modlp: contract violation: {exc}", file=sys.stderr)
        _write_error(out, args.command, exc, cfg_hash)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"modlp: I/O error: {exc}", file=sys.stderr)
        _write_error(out, args.command, exc, cfg_hash)
        return EXIT_INPUT
    except Exception as exc:  # numerical failures surface as contract violations
        traceback.print_exc()
        _write_error(out, args.command, exc, cfg_hash)
        return EXIT_CONTRACT
    if not ok:
        print(f"modlp: {args.command}: one or more checks failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
