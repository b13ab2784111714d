"""End-to-end acceptance suite; prints one PASS/FAIL line per criterion."""

import pytest

from modlp import acceptance


@pytest.fixture(scope="module")
def results():
    return {}


def run(number, results, capsys):
    res = acceptance.run_criterion(number, seed=0)
    results[number] = res
    with capsys.disabled():
        print("\n" + res.line())
    return res


def test_criterion_01_approximation_numbers(results, capsys):
    r = run(1, results, capsys)
    assert r.metrics["max_abs_error"] <= 1e-10
    assert r.runtime < 5
    assert r.passed


def test_criterion_02_quasinorm_inequality(results, capsys):
    r = run(2, results, capsys)
    assert r.metrics["violations"] == 0
    assert r.passed


def test_criterion_03_loewner(results, capsys):
    r = run(3, results, capsys)
    for beta in (0.1, 0.25, 0.5, 0.9):
        assert r.metrics[f"violations_beta_{beta}"] == 0
    assert r.metrics["violations_square"] >= 1
    assert r.runtime < 30
    assert r.passed


def test_criterion_04_gns_modular(results, capsys):
    r = run(4, results, capsys)
    assert r.metrics["spectrum_error"] <= 1e-10
    assert r.metrics["delta_Q_residual"] <= 1e-10
    assert r.metrics["inclusion_worst_slack"] >= -1e-9
    assert r.metrics["mixture_failures"] == 0
    assert r.passed


def test_criterion_05_conjugation(results, capsys):
    r = run(5, results, capsys)
    assert r.metrics["postcondition_residual"] <= 1e-9
    assert r.metrics["split_residual"] <= 1e-9
    assert r.metrics["norm_residual"] <= 1e-12
    assert r.passed


def test_criterion_06_polylog(results, capsys):
    r = run(6, results, capsys)
    assert r.metrics["polylog_error"] <= 1e-12
    assert r.metrics["bose_brute_rel_error"] <= 1e-9
    assert r.metrics["exp_bound_failures"] == 0
    assert r.passed


def test_criterion_07_fock_sandwich(results, capsys):
    r = run(7, results, capsys)
    assert r.metrics["fermi_failures"] == 0
    assert r.metrics["bose_failures"] == 0
    assert r.metrics["bose_truncation_defect"] <= 1e-6
    assert r.runtime < 180
    assert r.passed


def test_criterion_08_lattice_decay(results, capsys):
    r = run(8, results, capsys)
    assert r.metrics["margin"] == 20
    assert r.metrics["s10_over_s1"] <= 1e-6
    assert r.metrics["slope"] < 0 and r.metrics["r_squared"] >= 0.95
    assert r.runtime < 60
    assert r.passed


def test_criterion_09_offdiagonal_rate(results, capsys):
    r = run(9, results, capsys)
    assert r.metrics["rel_dev_m0.5"] <= 0.3 and r.metrics["rel_dev_m1"] <= 0.3
    assert r.metrics["rate_m1"] > r.metrics["rate_m0.5"]
    assert r.passed


def test_criterion_10_modular_chain(results, capsys):
    r = run(10, results, capsys)
    assert r.metrics["violations"] == 0 and r.metrics["rows"] > 0
    assert r.passed


def test_criterion_11_determinism(results, capsys):
    r = run(11, results, capsys)
    assert r.metrics["identical"] and r.metrics["exit_codes_zero"]
    assert r.passed


def test_summary(results, capsys):
    with capsys.disabled():
        print()
        for n in sorted(results):
            print(results[n].line())
    assert sorted(results) == list(range(1, 12))
    assert acceptance.total_passed(results.values())
