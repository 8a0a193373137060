"""Command-line interface: subcommands, exit codes, report stability."""

import json

import numpy as np
import pytest

from qpoisson import cli
from qpoisson.cli import (EXIT_BUDGET, EXIT_OK, EXIT_VALIDATION,
                          EXIT_ZERO_PROBABILITY, dump_json, format_float, main)
from qpoisson.statevector import ZeroProbabilityError


def run_cli(args, capsys=None):
    code = main(args)
    return code


def read_report(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class TestFloatSerialization:
    def test_round_trip_random_doubles(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            x = float(rng.normal() * 10.0 ** rng.integers(-300, 300))
            assert float(format_float(x)) == x

    def test_json_round_trip_bytes(self):
        payload = {"a": 1 / 3, "b": [1.0, 2.5e-19, 7], "c": {"d": None, "e": True}}
        text = dump_json(payload)
        again = dump_json(json.loads(text))
        assert text == again


class TestSolve:
    def test_benchmark_run(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(["solve", "--n", "4",
                        "--rhs", "0,0.70710678,0.5,0.5",
                        "--frac-bits", "4", "--amp", "4",
                        "--mode", "compact", "--out", str(out)])
        assert code == EXIT_OK
        report = read_report(out)
        assert report["schema_version"] == 1
        assert set(report) == {"schema_version", "problem", "layout", "result",
                               "errors", "cost", "timing"}
        assert report["result"]["state_fidelity"] > 0.999
        assert np.allclose(report["result"]["solution"],
                           [0.55299, 0.67407, 0.48974], atol=1e-4)
        assert report["timing"] is None

    def test_scalar_case(self, tmp_path):
        out = tmp_path / "r.json"
        code = run_cli(["solve", "--n", "2", "--rhs", "0,1", "--out", str(out)])
        assert code == EXIT_OK
        report = read_report(out)
        assert report["result"]["solution"] == [1.0]
        assert report["result"]["success_probability"] == pytest.approx(1 / 64, rel=1e-9)

    def test_rejects_non_power_of_two(self, capsys):
        assert run_cli(["solve", "--n", "3", "--rhs", "0,1,0"]) == EXIT_VALIDATION
        assert "power of two" in capsys.readouterr().err

    def test_rejects_bad_rhs_length(self, capsys):
        assert run_cli(["solve", "--n", "4", "--rhs", "0,1"]) == EXIT_VALIDATION

    def test_budget_exit_code(self):
        code = run_cli(["solve", "--n", "8", "--frac-bits", "8", "--amp", "8",
                        "--mode", "faithful"])
        assert code == EXIT_BUDGET

    def test_zero_probability_exit_code(self, monkeypatch):
        def boom(problem, config):
            raise ZeroProbabilityError("no luck")
        monkeypatch.setattr(cli, "run_hhl", boom)
        assert run_cli(["solve", "--n", "2", "--rhs", "0,1"]) == EXIT_ZERO_PROBABILITY

    def test_rhs_from_file(self, tmp_path):
        rhs_file = tmp_path / "rhs.txt"
        rhs_file.write_text("0\n0.70710678\n0.5\n0.5\n")
        out = tmp_path / "r.json"
        code = run_cli(["solve", "--n", "4", "--rhs", f"@{rhs_file}",
                        "--frac-bits", "4", "--out", str(out)])
        assert code == EXIT_OK
        assert read_report(out)["result"]["state_fidelity"] > 0.999

    def test_missing_rhs_file(self, capsys):
        assert run_cli(["solve", "--n", "4", "--rhs", "@/nonexistent"]) == EXIT_VALIDATION

    def test_report_byte_stable(self, tmp_path):
        args = ["solve", "--n", "4", "--frac-bits", "2"]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli(args + ["--out", str(a)]) == EXIT_OK
        assert run_cli(args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_report_json_reemits_identically(self, tmp_path):
        out = tmp_path / "report.json"
        run_cli(["solve", "--n", "4", "--frac-bits", "2", "--out", str(out)])
        text = out.read_text()
        assert dump_json(json.loads(text)) + "\n" == text


class TestClassical:
    def test_solutions_and_cross_check(self, tmp_path):
        out = tmp_path / "c.json"
        code = run_cli(["classical", "--n", "4", "--rhs", "0,0.70710678,0.5,0.5",
                        "--out", str(out)])
        assert code == EXIT_OK
        result = read_report(out)["result"]
        assert np.allclose(result["solution_normalized"],
                           [0.55299, 0.67407, 0.48974], atol=1e-4)
        assert result["cross_check_max_difference"] < 1e-10
        assert result["condition_number"] == pytest.approx(5.828427, abs=1e-6)

    def test_raw_solution_scales_with_input(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(["classical", "--n", "2", "--rhs", "0,1", "--out", str(a)])
        run_cli(["classical", "--n", "2", "--rhs", "0,5", "--out", str(b)])
        ra = read_report(a)["result"]["solution_raw"]
        rb = read_report(b)["result"]["solution_raw"]
        assert rb[0] == pytest.approx(5 * ra[0], rel=1e-12)


class TestSweep:
    def test_amplification_reduces_error(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli(["sweep", "--n", "8", "--param", "amp", "--values", "0,4",
                        "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        header = lines[0].split(",")
        rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
        errs = {r["value"]: float(r["max_relative_error"]) for r in rows}
        assert errs["4"] < errs["0"]

    def test_single_exact_row(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli(["sweep", "--n", "2", "--param", "N", "--values", "2",
                        "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert float(row["max_relative_error"]) < 1e-9

    def test_frac_bit_sweep_monotone(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli(["sweep", "--n", "4", "--param", "frac-bits",
                        "--values", "0,2,4,8", "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        header = lines[0].split(",")
        errs = [float(dict(zip(header, ln.split(",")))["max_relative_error"])
                for ln in lines[1:]]
        for a, b in zip(errs, errs[1:]):
            assert b <= a + 1e-12

    def test_partial_failure_recorded(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli(["sweep", "--n", "4", "--param", "N", "--values", "4,6,8",
                        "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 4
        statuses = [ln.split(",")[6] for ln in lines[1:]]
        assert statuses == ["ok", "error", "ok"]

    def test_json_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        code = run_cli(["sweep", "--n", "4", "--param", "amp", "--values", "0",
                        "--format", "json", "--out", str(out)])
        assert code == EXIT_OK
        rows = read_report(out)["result"]["sweep"]
        assert rows[0]["status"] == "ok"


class TestEstimate:
    def test_faithful_defaults_band(self, tmp_path):
        out = tmp_path / "cost.json"
        code = run_cli(["estimate", "--n", "4", "--out", str(out)])
        assert code == EXIT_OK
        cost = read_report(out)["cost"]
        assert 550 <= cost["cnot_total"] <= 55000
        assert cost["reference_fidelity_log10"] < -20

    def test_empty_circuit_is_perfect(self, tmp_path):
        out = tmp_path / "cost.json"
        code = run_cli(["estimate", "--n", "4", "--empty-circuit", "--out", str(out)])
        assert code == EXIT_OK
        cost = read_report(out)["cost"]
        assert cost["cnot_total"] == 0
        assert cost["fidelity"] == 1.0

    def test_gate_accuracy_flag(self, tmp_path):
        out = tmp_path / "cost.json"
        code = run_cli(["estimate", "--n", "4", "--gate-accuracy", "0.99",
                        "--out", str(out)])
        assert code == EXIT_OK
        cost = read_report(out)["cost"]
        assert cost["reference_accuracy"] == 0.99

    def test_rules_override_file(self, tmp_path):
        rules = tmp_path / "rules.json"
        rules.write_text('{"controlled_phase": 3}')
        out = tmp_path / "cost.json"
        code = run_cli(["estimate", "--n", "4", "--cost-rules", str(rules),
                        "--out", str(out)])
        assert code == EXIT_OK
        report = read_report(out)["cost"]
        assert report["rules"]["controlled_phase"] == 3
        assert report["cnot_total"] == 1026 + 15 * 2  # both Fourier blocks

    def test_budget_exit(self):
        assert run_cli(["estimate", "--n", "8", "--frac-bits", "9", "--amp", "9",
                        "--mode", "faithful"]) == EXIT_BUDGET


class TestNoisy:
    def test_zero_rate_leakage_zero(self, tmp_path):
        out = tmp_path / "noisy.json"
        code = run_cli(["noisy", "--n", "4", "--cnot-error", "0",
                        "--trajectories", "10", "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        result = read_report(out)["result"]
        assert result["leakage_probability"] == 0.0

    def test_default_rate_leaks(self, tmp_path):
        out = tmp_path / "noisy.json"
        code = run_cli(["noisy", "--n", "4", "--trajectories", "150",
                        "--seed", "2", "--out", str(out)])
        assert code == EXIT_OK
        assert read_report(out)["result"]["leakage_probability"] > 0.01

    def test_seeded_reports_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["noisy", "--n", "4", "--trajectories", "40", "--seed", "7"]
        assert run_cli(args + ["--out", str(a)]) == EXIT_OK
        assert run_cli(args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_budget_exit(self):
        assert run_cli(["noisy", "--n", "8", "--frac-bits", "7", "--amp", "7",
                        "--trajectories", "1"]) == EXIT_BUDGET
