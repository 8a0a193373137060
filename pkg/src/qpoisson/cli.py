"""Command-line front end: solve | classical | sweep | estimate | noisy.

Reports are JSON (schema_version 1, top-level keys: schema_version, problem,
layout, result, errors, cost, timing); sweeps default to CSV.  All floats are
serialized with 17 significant digits so values round-trip exactly, and
reports are byte-stable across runs for a fixed (config, seed) unless
--timing is requested.

Exit codes: 0 success, 2 validation error, 3 qubit budget exceeded,
4 zero post-selection probability.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import relative_errors
from .cost import CostRules, estimate_cost
from .hhl import BudgetExceededError, HhlConfig, layout_registers, run_hhl
from .noise import NoiseModel, noisy_trajectories
from .poisson import (PoissonProblem, benchmark_rhs, condition_number,
                      eigenpairs, load_rhs, solve_spectral, solve_thomas)
from .statevector import ZeroProbabilityError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_ZERO_PROBABILITY = 4

SCHEMA_VERSION = 1


# --- deterministic JSON/CSV emission ---------------------------------------

def format_float(x: float) -> str:
    return format(float(x), ".17g")


def dump_json(value, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        import json as _json
        return _json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        import json as _json
        items = [
            f"{inner}{_json.dumps(str(k))}: {dump_json(v, indent + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            return "[]"
        items = [f"{inner}{dump_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def dump_csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# --- shared plumbing --------------------------------------------------------

def _parse_rhs(text: str, N: int) -> np.ndarray:
    if text.startswith("@"):
        return load_rhs(text[1:])
    try:
        values = np.array([float(part) for part in text.split(",")])
    except ValueError as exc:
        raise ValueError(f"cannot parse --rhs list: {exc}") from exc
    if len(values) != N:
        raise ValueError(f"--rhs needs exactly N={N} comma-separated values, got {len(values)}")
    return values


def _problem_from_args(args) -> PoissonProblem:
    if args.rhs is None:
        rhs = benchmark_rhs(args.n)
    else:
        rhs = _parse_rhs(args.rhs, args.n)
    return PoissonProblem(args.n, rhs)


def _config_from_args(args, mode_default: str = "compact") -> HhlConfig:
    return HhlConfig(
        frac_bits=args.frac_bits,
        amp_exponent=args.amp,
        reg_a_bits=args.reg_a_bits,
        mode=args.mode or mode_default,
        qubit_budget=args.qubit_budget,
    )


def _problem_section(problem: PoissonProblem) -> dict:
    return {
        "N": problem.N,
        "h": problem.h,
        "rhs": list(problem.rhs),
        "scale": problem.scale,
    }


def _layout_section(layout) -> dict:
    return {
        "n": layout.n,
        "m": layout.m,
        "l": layout.l,
        "mode": layout.mode,
        "int_bits": layout.format.int_bits,
        "frac_bits": layout.format.frac_bits,
        "amp_exponent": layout.format.amp_exponent,
        "total_qubits": layout.total_qubits,
    }


def _cost_section(report) -> dict:
    return {
        "gate_counts": report.gate_counts,
        "cnot_total": report.cnot_total,
        "cnot_error_rate": report.cnot_error_rate,
        "fidelity_log10": report.fidelity_log10,
        "reference_accuracy": report.reference_accuracy,
        "reference_fidelity_log10": report.reference_fidelity_log10,
        "rules": report.rules,
    }


def _timing_section(args, seconds: float | None) -> dict | None:
    if getattr(args, "timing", False) and seconds is not None:
        return {"wall_seconds": seconds}
    return None


def _report(problem=None, layout=None, result=None, errors=None, cost=None,
            timing=None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": problem,
        "layout": layout,
        "result": result,
        "errors": errors,
        "cost": cost,
        "timing": timing,
    }


# --- subcommands ------------------------------------------------------------

def cmd_solve(args) -> int:
    problem = _problem_from_args(args)
    config = _config_from_args(args)
    result = run_hhl(problem, config)
    report_errors = relative_errors(result.solution, result.classical_reference)
    cost = estimate_cost(result.layout, _rules_from_args(args),
                         cnot_error_rate=args.cnot_error,
                         reference_accuracy=args.gate_accuracy)
    diagnostics = dict(result.diagnostics)
    wall = diagnostics.pop("wall_seconds", None)
    report = _report(
        problem=_problem_section(problem),
        layout=_layout_section(result.layout),
        result={
            "solution": list(result.solution),
            "classical_reference": list(result.classical_reference),
            "success_probability": result.success_probability,
            "state_fidelity": result.state_fidelity,
            "diagnostics": diagnostics,
        },
        errors={
            "per_state_relative_error": [
                None if np.isnan(e) else float(e)
                for e in report_errors.per_state_relative_error
            ],
            "excluded_states": list(report_errors.excluded_states),
            "max_relative_error": report_errors.max_relative_error,
            "mean_relative_error": report_errors.mean_relative_error,
        },
        cost=_cost_section(cost),
        timing=_timing_section(args, wall),
    )
    _emit(dump_json(report) + "\n", args.out)
    return EXIT_OK


def cmd_classical(args) -> int:
    problem = _problem_from_args(args)
    v = solve_thomas(problem)
    v_spectral = solve_spectral(problem)
    spectral = eigenpairs(problem.N)
    norm = float(np.linalg.norm(v))
    report = _report(
        problem=_problem_section(problem),
        result={
            "solution_normalized": list(v / norm),
            "solution_raw": list(v * problem.scale),
            "cross_check_max_difference": float(np.max(np.abs(v - v_spectral))),
            "eigenvalues": list(spectral.lambdas),
            "condition_number": condition_number(spectral),
        },
    )
    _emit(dump_json(report) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    values = [int(v) for v in args.values.split(",")]
    rows = []
    for value in values:
        n, frac_bits, amp = args.n, args.frac_bits, args.amp
        if args.param == "frac-bits":
            frac_bits = value
        elif args.param == "amp":
            amp = value
        else:
            n = value
        try:
            rhs = benchmark_rhs(n) if args.rhs is None else _parse_rhs(args.rhs, n)
            problem = PoissonProblem(n, rhs)
            config = HhlConfig(frac_bits=frac_bits, amp_exponent=amp,
                               reg_a_bits=args.reg_a_bits,
                               mode=args.mode or "compact",
                               qubit_budget=args.qubit_budget)
            result = run_hhl(problem, config)
            report = relative_errors(result.solution, result.classical_reference)
            rows.append([args.param, value, report.max_relative_error,
                         report.mean_relative_error, result.state_fidelity,
                         result.success_probability, "ok", ""])
        except (ValueError, BudgetExceededError, ZeroProbabilityError) as exc:
            rows.append([args.param, value, None, None, None, None,
                         "error", str(exc).replace(",", ";")])
    header = ["parameter", "value", "max_relative_error", "mean_relative_error",
              "state_fidelity", "success_probability", "status", "message"]
    if args.format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        _emit(dump_json(_report(result={"sweep": payload})) + "\n", args.out)
    else:
        _emit(dump_csv(header, rows), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    config = _config_from_args(args, mode_default="faithful")
    layout = layout_registers(args.n, config)
    rules = _rules_from_args(args)
    if args.empty_circuit:
        from .cost import cost_of
        report = cost_of([], rules, cnot_error_rate=args.cnot_error,
                         reference_accuracy=args.gate_accuracy)
    else:
        report = estimate_cost(layout, rules, cnot_error_rate=args.cnot_error,
                               reference_accuracy=args.gate_accuracy)
    section = _cost_section(report)
    section["fidelity"] = report.fidelity
    section["reference_fidelity"] = report.reference_fidelity
    out = _report(layout=_layout_section(layout), cost=section)
    _emit(dump_json(out) + "\n", args.out)
    return EXIT_OK


def cmd_noisy(args) -> int:
    problem = _problem_from_args(args)
    config = _config_from_args(args)
    noise = NoiseModel(cnot_error_rate=args.cnot_error)
    result = noisy_trajectories(problem, config, noise,
                                trajectories=args.trajectories, seed=args.seed)
    report = _report(
        problem=_problem_section(problem),
        result={
            "noiseless_distribution": list(result.noiseless_distribution),
            "noisy_distribution": list(result.noisy_distribution),
            "leakage_probability": result.leakage_probability,
            "trajectories": result.trajectories,
            "skipped": result.skipped,
            "cnot_error_rate": noise.cnot_error_rate,
            "seed": args.seed,
        },
    )
    _emit(dump_json(report) + "\n", args.out)
    return EXIT_OK


def _rules_from_args(args) -> CostRules:
    if getattr(args, "cost_rules", None):
        return CostRules.from_file(args.cost_rules)
    return CostRules()


# --- argument parsing --------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, with_rhs: bool = True) -> None:
    parser.add_argument("--n", type=int, required=True,
                        help="grid interval count N (power of two; the system has N-1 unknowns)")
    if with_rhs:
        parser.add_argument("--rhs", type=str, default=None,
                            help="comma-separated amplitudes or @file; "
                                 "defaults to the bundled benchmark input")
    parser.add_argument("--frac-bits", type=int, default=0,
                        help="fractional eigenvalue bits f (default 0)")
    parser.add_argument("--amp", type=int, default=0,
                        help="eigenvalue amplification exponent i (default 0)")
    parser.add_argument("--reg-a-bits", type=int, default=None,
                        help="angle register width l (faithful mode; default m)")
    parser.add_argument("--mode", choices=("faithful", "compact"), default=None,
                        help="rotation mode (default compact; estimate defaults to faithful)")
    parser.add_argument("--qubit-budget", type=int, default=30,
                        help="maximum total qubits (default 30)")
    parser.add_argument("--out", type=str, default=None,
                        help="report path (default stdout)")
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock timing (report is then not byte-stable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpoisson",
        description="Quantum solver for the 1-D finite-difference Poisson equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the quantum pipeline and report the solution")
    _add_common(p)
    p.add_argument("--cnot-error", type=float, default=8.094e-2)
    p.add_argument("--gate-accuracy", type=float, default=0.92)
    p.add_argument("--cost-rules", type=str, default=None,
                   help="JSON file overriding scalar gate costs")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classical", help="run only the classical oracles")
    _add_common(p)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("sweep", help="sweep one parameter and tabulate errors")
    _add_common(p)
    p.add_argument("--param", choices=("frac-bits", "amp", "N"), required=True)
    p.add_argument("--values", type=str, required=True,
                   help="comma-separated parameter values")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate", help="CNOT-equivalent cost of the abstract circuit")
    _add_common(p, with_rhs=False)
    p.add_argument("--cnot-error", type=float, default=8.094e-2)
    p.add_argument("--gate-accuracy", type=float, default=0.92)
    p.add_argument("--cost-rules", type=str, default=None)
    p.add_argument("--empty-circuit", action="store_true",
                   help="price an empty circuit (sanity check: fidelity 1)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("noisy", help="Monte Carlo trajectory noise experiment")
    _add_common(p)
    p.add_argument("--cnot-error", type=float, default=8.094e-2)
    p.add_argument("--trajectories", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noisy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ZeroProbabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ZERO_PROBABILITY
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
