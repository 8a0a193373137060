"""CNOT-equivalent resource estimation for the abstract pipeline circuit.

The rules table prices every gate family in CNOT equivalents using standard
textbook constructions (the hardware transpiler that would produce the real
count is out of scope, so the estimate is an order-of-magnitude instrument,
not a reproduction of any particular compiled circuit).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .hhl import RegisterLayout


@dataclass(frozen=True)
class CostRules:
    """CNOT-equivalent cost of each gate family.

    Scalar entries may be overridden from a configuration file; the
    parametric families are fixed formulas:

      k-controlled single-qubit gate   2^k           (multiplexor bound)
      dense w-qubit unitary            ceil((4^w - 3w - 1) / 4)
      controlled dense w-qubit unitary priced as a (w+1)-qubit dense unitary
      XOR lookup of l bits from m bits l * 2^m       (one m-controlled X per
                                                      set output bit)
    """

    cnot: int = 1
    swap: int = 3
    controlled_rotation: int = 2
    controlled_phase: int = 2
    toffoli: int = 6

    def k_controlled(self, k: int) -> int:
        return 1 << k

    def dense_unitary(self, width: int) -> int:
        return math.ceil((4 ** width - 3 * width - 1) / 4)

    def controlled_dense_unitary(self, width: int) -> int:
        return self.dense_unitary(width + 1)

    def xor_lookup(self, source_bits: int, dest_bits: int) -> int:
        return dest_bits * (1 << source_bits)

    def as_dict(self) -> dict:
        return {
            "cnot": self.cnot,
            "swap": self.swap,
            "controlled_rotation": self.controlled_rotation,
            "controlled_phase": self.controlled_phase,
            "toffoli": self.toffoli,
        }

    @classmethod
    def from_file(cls, path) -> "CostRules":
        with open(path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        return cls.from_mapping(overrides)

    @classmethod
    def from_mapping(cls, overrides: dict) -> "CostRules":
        rules = cls()
        known = set(rules.as_dict())
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown cost-rule keys: {sorted(unknown)} (known: {sorted(known)})")
        clean = {}
        for key, value in overrides.items():
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"cost for {key!r} must be a positive integer, got {value!r}")
            clean[key] = value
        return replace(rules, **clean)


@dataclass(frozen=True)
class CircuitElement:
    """One slot of the abstract circuit: ``kind`` with an optional width (for
    dense / k-controlled families) or source/dest bit counts (for lookups),
    repeated ``count`` times."""

    kind: str
    count: int = 1
    width: int = 0
    source_bits: int = 0
    dest_bits: int = 0


def element_cost(element: CircuitElement, rules: CostRules) -> int:
    kind = element.kind
    if kind == "hadamard":
        each = 0
    elif kind == "cnot":
        each = rules.cnot
    elif kind == "swap":
        each = rules.swap
    elif kind == "controlled_rotation":
        each = rules.controlled_rotation
    elif kind == "controlled_phase":
        each = rules.controlled_phase
    elif kind == "toffoli":
        each = rules.toffoli
    elif kind == "k_controlled":
        each = rules.k_controlled(element.width)
    elif kind == "dense_unitary":
        each = rules.dense_unitary(element.width)
    elif kind == "controlled_dense_unitary":
        each = rules.controlled_dense_unitary(element.width)
    elif kind == "xor_lookup":
        each = rules.xor_lookup(element.source_bits, element.dest_bits)
    else:
        raise ValueError(f"unknown circuit element kind {element.kind!r}")
    return each * element.count


def _qft_elements(m: int) -> list[CircuitElement]:
    return [
        CircuitElement("hadamard", count=m),
        CircuitElement("controlled_phase", count=m * (m - 1) // 2),
        CircuitElement("swap", count=m // 2),
    ]


def hhl_circuit_elements(layout: RegisterLayout) -> list[CircuitElement]:
    """Abstract gate inventory of the pipeline for a given layout: phase
    estimation, rotation stage, and the mirrored uncompute."""
    n, m, l = layout.n, layout.m, layout.l
    qpe = [
        CircuitElement("hadamard", count=m),
        CircuitElement("controlled_dense_unitary", count=m, width=n),
    ] + _qft_elements(m)
    if layout.mode == "faithful":
        rotation = [
            CircuitElement("xor_lookup", source_bits=m, dest_bits=l),
            CircuitElement("controlled_rotation", count=l),
        ]
        unlookup = [CircuitElement("xor_lookup", source_bits=m, dest_bits=l)]
    else:
        rotation = [CircuitElement("k_controlled", width=m)]
        unlookup = []
    inverse_qpe = _qft_elements(m) + [
        CircuitElement("controlled_dense_unitary", count=m, width=n),
        CircuitElement("hadamard", count=m),
    ]
    return qpe + rotation + unlookup + inverse_qpe


@dataclass(frozen=True)
class CostReport:
    gate_counts: dict
    cnot_total: int
    cnot_error_rate: float
    reference_accuracy: float
    rules: dict

    @property
    def fidelity(self) -> float:
        return hardware_fidelity(self.cnot_total, 1.0 - self.cnot_error_rate)

    @property
    def fidelity_log10(self) -> float:
        return hardware_fidelity_log10(self.cnot_total, 1.0 - self.cnot_error_rate)

    @property
    def reference_fidelity(self) -> float:
        return hardware_fidelity(self.cnot_total, self.reference_accuracy)

    @property
    def reference_fidelity_log10(self) -> float:
        return hardware_fidelity_log10(self.cnot_total, self.reference_accuracy)


def cost_of(elements, rules: CostRules | None = None,
            cnot_error_rate: float = 8.094e-2,
            reference_accuracy: float = 0.92) -> CostReport:
    """Sum CNOT equivalents over an abstract gate sequence (additive by
    construction: concatenating sequences adds their totals)."""
    rules = rules or CostRules()
    counts: dict[str, int] = {}
    total = 0
    for element in elements:
        counts[element.kind] = counts.get(element.kind, 0) + element.count
        total += element_cost(element, rules)
    return CostReport(
        gate_counts=dict(sorted(counts.items())),
        cnot_total=total,
        cnot_error_rate=cnot_error_rate,
        reference_accuracy=reference_accuracy,
        rules=rules.as_dict(),
    )


def estimate_cost(layout: RegisterLayout, rules: CostRules | None = None,
                  cnot_error_rate: float = 8.094e-2,
                  reference_accuracy: float = 0.92) -> CostReport:
    return cost_of(hhl_circuit_elements(layout), rules,
                   cnot_error_rate=cnot_error_rate,
                   reference_accuracy=reference_accuracy)


def hardware_fidelity(cnot_count: float, gate_accuracy: float) -> float:
    """gate_accuracy^cnot_count, evaluated in the log domain so huge counts
    underflow gracefully instead of overflowing intermediate products."""
    if cnot_count < 0:
        raise ValueError("CNOT count must be >= 0")
    if not 0.0 < gate_accuracy <= 1.0:
        raise ValueError("gate accuracy must be in (0, 1]")
    return float(np.exp(cnot_count * np.log(gate_accuracy)))


def hardware_fidelity_log10(cnot_count: float, gate_accuracy: float) -> float:
    if cnot_count < 0:
        raise ValueError("CNOT count must be >= 0")
    if not 0.0 < gate_accuracy <= 1.0:
        raise ValueError("gate accuracy must be in (0, 1]")
    return float(cnot_count * np.log10(gate_accuracy))
