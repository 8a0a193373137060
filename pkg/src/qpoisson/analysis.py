"""Accuracy metrics and success-probability scaling studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hhl import HhlConfig, run_hhl
from .poisson import PoissonProblem, eigenpairs, flat_overlap_rhs


@dataclass(frozen=True)
class ErrorReport:
    """Component-wise relative error of a quantum solution against a
    classical reference, after normalization and sign alignment.  Components
    where the reference is zero are excluded and flagged."""

    per_state_relative_error: np.ndarray
    excluded_states: tuple
    max_relative_error: float
    mean_relative_error: float
    state_fidelity: float


def relative_errors(quantum, classical) -> ErrorReport:
    q = np.asarray(quantum, dtype=float)
    a = np.asarray(classical, dtype=float)
    if q.shape != a.shape or q.ndim != 1:
        raise ValueError(f"vector shapes differ: {q.shape} vs {a.shape}")
    qn = np.linalg.norm(q)
    an = np.linalg.norm(a)
    if qn == 0.0 or an == 0.0:
        raise ValueError("cannot compare zero vectors")
    q = q / qn
    a = a / an
    if np.dot(q, a) < 0.0:
        q = -q
    nonzero = np.abs(a) > 1e-12
    errors = np.full(q.shape, np.nan)
    errors[nonzero] = np.abs(q[nonzero] - a[nonzero]) / np.abs(a[nonzero])
    excluded = tuple(int(i) for i in np.flatnonzero(~nonzero))
    finite = errors[nonzero]
    return ErrorReport(
        per_state_relative_error=errors,
        excluded_states=excluded,
        max_relative_error=float(finite.max()) if finite.size else 0.0,
        mean_relative_error=float(finite.mean()) if finite.size else 0.0,
        state_fidelity=float(abs(np.dot(q, a))),
    )


def success_scaling(N_list, config: HhlConfig, rhs_builder=flat_overlap_rhs) -> list[dict]:
    """Run the pipeline across problem sizes and tabulate (N, kappa, P,
    P * kappa^2).

    The default input is ``flat_overlap_rhs``: every eigenbranch contributes
    equally to the solution, for which P * kappa^2 approaches a constant.
    """
    rows = []
    for N in N_list:
        problem = rhs_builder(N)
        if not isinstance(problem, PoissonProblem):
            problem = PoissonProblem(N, problem)
        result = run_hhl(problem, config)
        kappa = eigenpairs(N).kappa
        p = result.success_probability
        rows.append({
            "N": int(N),
            "kappa": float(kappa),
            "success_probability": float(p),
            "p_kappa_squared": float(p * kappa * kappa),
        })
    return rows
