import csv
import json
from pathlib import Path

import pytest

from modlp import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_csv(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(command, cfg_path, out, *extra):
    return cli.main([command, "--config", cfg_path, "--out", str(out), *extra])


CIRCLE64 = {
    "seed": 0,
    "lattice": {"topology": "circle", "sizes": [64], "mass": 1.0},
    "pairs": [{"inner": {"start": 28, "stop": 36}, "outer": {"start": 22, "stop": 42}},
              {"inner": {"start": 28, "stop": 36}, "outer": {"start": 18, "stop": 46}}],
}


def test_lattice_spectrum_rows_and_sections(tmp_path):
    assert run("lattice-spectrum", write_config(tmp_path, CIRCLE64), tmp_path / "o") == 0
    spec = read_csv(tmp_path / "o" / "spectrum.csv")
    assert len(spec) == 64
    decay = read_csv(tmp_path / "o" / "defect_decay.csv")
    assert sorted({r["pair"] for r in decay}) == ["0", "1"]
    assert (tmp_path / "o" / "decay.svg").read_text().lstrip().startswith("<?xml")
    text = (tmp_path / "o" / "spectrum.csv").read_text()
    assert text.rstrip().splitlines()[-1].startswith("# config_hash=")


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, CIRCLE64)
    assert run("lattice-spectrum", cfg, tmp_path / "a") == 0
    assert run("lattice-spectrum", cfg, tmp_path / "b", "--threads", "2") == 0
    for name in ("spectrum.csv", "defect_decay.csv", "defect_fit.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_modular_decay_quarter_constant(tmp_path):
    cfg = {"seed": 1, "alphas": [0.25], "ps": [0.5, 1, 2], "random_states": {"count": 5, "max_modes": 3}}
    assert run("modular-decay", write_config(tmp_path, cfg), tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "deltamod_chain.csv")
    assert rows and all(float(r["constant"]) == 1.0 for r in rows)
    assert all(r["passed"] == "true" for r in rows)


def test_empty_region_is_input_error(tmp_path):
    cfg = dict(CIRCLE64, pairs=[{"inner": {"start": 30, "stop": 30}, "outer": {"start": 20, "stop": 40}}])
    assert run("lattice-spectrum", write_config(tmp_path, cfg), tmp_path / "o") == 2
    err = read_csv(tmp_path / "o" / "errors.csv")
    assert err[0]["command"] == "lattice-spectrum" and "empty" in err[0]["message"].lower()


def test_bad_config_and_seed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("gns-verify", str(bad), tmp_path / "o") == 2
    cfg = write_config(tmp_path, {"blocks": [2], "rho_diag": [0.5, 0.5]})
    assert run("gns-verify", cfg, tmp_path / "o", "--seed", "-1") == 2


def test_modular_decay_chain100_config(tmp_path):
    assert run("modular-decay", str(CONFIGS / "modular_decay.json"), tmp_path / "o", "--threads", "4") == 0
    rows = read_csv(tmp_path / "o" / "deltamod_chain.csv")
    assert {r["source"] for r in rows} >= {"pair_0", "pair_1"}
    assert all(r["passed"] == "true" for r in rows)


def test_loewner_sweep(tmp_path):
    cfg = {"seed": 0, "functions": ["sqrt", "square"], "trials": 1000, "dim": 4,
           "expect_monotone": {"sqrt": True, "square": False}}
    assert run("loewner-sweep", write_config(tmp_path, cfg), tmp_path / "o") == 0
    rows = {r["function"]: r for r in read_csv(tmp_path / "o" / "loewner.csv")}
    assert int(rows["sqrt"]["violations"]) == 0
    assert int(rows["square"]["violations"]) > 0


def test_loewner_failed_expectation_exit_code(tmp_path):
    cfg = {"functions": ["square"], "trials": 200, "expect_monotone": {"square": True}}
    assert run("loewner-sweep", write_config(tmp_path, cfg), tmp_path / "o") == 1


def test_gns_verify(tmp_path):
    assert run("gns-verify", str(CONFIGS / "gns_m2.json"), tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "gns_report.csv")
    ev = sorted(float(r["value"]) for r in rows if r["kind"] == "modular_eigenvalue")
    assert ev == pytest.approx([0.5, 1, 1, 2], abs=1e-10)


def test_fock_sandwich(tmp_path):
    cfg = json.loads((CONFIGS / "fock_sandwich.json").read_text())
    cfg["random"]["count"] = 3
    cfg["restarts"] = 4
    assert run("fock-sandwich", write_config(tmp_path, cfg), tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "xi_bounds.csv")
    assert len(rows) == 5
    assert all(float(r["lower"]) <= float(r["upper"]) for r in rows)


def test_yaml_config(tmp_path):
    assert run("lattice-spectrum", str(CONFIGS / "lattice_circle.yaml"), tmp_path / "o") == 0
    assert (tmp_path / "o" / "offdiagonal_decay.csv").exists()


def test_acceptance_reference_config(tmp_path, capsys):
    assert run("acceptance", str(CONFIGS / "acceptance.json"), tmp_path / "o") == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 11
    times = json.loads((tmp_path / "o" / "runtimes.json").read_text())
    assert sorted(times, key=int) == [str(k) for k in range(1, 12)]
