"""Monte Carlo trajectory noise: a random two-qubit Pauli is inserted, with
the per-gate CNOT error probability, after every CNOT equivalent of the
pipeline.

The rotation and Fourier stages are lowered to explicit two-qubit gates
(controlled phases, swaps, one multiplexed rotation priced at 2^m CNOT
equivalents); the dense phase-estimation blocks stay exact and instead emit
their CNOT-equivalent count as independent depolarizing events on random
qubit pairs inside the block's support.  Trajectory T draws its random
stream from (seed, T), so results are independent of scheduling and
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import statevector as sv
from .cost import CostRules
from .hhl import (BudgetExceededError, HhlConfig, build_omega_table,
                  layout_registers, _evolution_power)
from .poisson import PoissonProblem, eigenpairs
from .statevector import Register, ZeroProbabilityError

NOISY_QUBIT_BUDGET = 20
_PREFIX_CACHE_QUBIT_LIMIT = 14

_SWAP_MATRIX = np.array([
    [1, 0, 0, 0],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
], dtype=np.complex128)

_PAULI_1Q = [sv.pauli("I"), sv.pauli("X"), sv.pauli("Y"), sv.pauli("Z")]


@lru_cache(maxsize=None)
def _pauli_gate(pauli_index: int, qubit: int) -> sv.GateOp:
    return sv.single_qubit(_PAULI_1Q[pauli_index], qubit)


@dataclass(frozen=True)
class NoiseModel:
    """Two-qubit depolarizing noise after each CNOT-equivalent gate: with
    probability ``cnot_error_rate`` one of the 15 non-identity two-qubit
    Paulis (uniformly chosen) follows the gate."""

    cnot_error_rate: float = 8.094e-2

    def __post_init__(self):
        if not 0.0 <= self.cnot_error_rate <= 1.0:
            raise ValueError(
                f"cnot_error_rate must be in [0, 1], got {self.cnot_error_rate}"
            )


@dataclass(frozen=True)
class _Step:
    gate: sv.GateOp
    # each entry is one noise opportunity: a fixed qubit pair, or the support
    # tuple of a dense block from which a random pair is drawn when it fires
    fixed_pairs: tuple = ()
    random_support: tuple = ()
    random_events: int = 0

    @property
    def events(self) -> int:
        return len(self.fixed_pairs) + self.random_events


def _qft_steps(register: Register, inverse: bool) -> list[_Step]:
    """Gate-level lowering of the Fourier block; each controlled phase costs
    two CNOT equivalents on its pair, each swap three."""
    w = register.width
    q = register.qubits
    steps: list[_Step] = []

    def cphase(j: int, k: int, sign: float) -> _Step:
        angle = sign * 2.0 * np.pi / float(1 << (k - j + 1))
        gate = sv.controlled_single_qubit(sv.phase(angle), q[k], (q[j],))
        return _Step(gate=gate, fixed_pairs=((q[j], q[k]),) * 2)

    def swap(a: int, b: int) -> _Step:
        gate = sv.controlled_dense(_SWAP_MATRIX, targets=(q[a], q[b]))
        return _Step(gate=gate, fixed_pairs=((q[a], q[b]),) * 3)

    def h(k: int) -> _Step:
        return _Step(gate=sv.single_qubit(sv.hadamard(), q[k]))

    if inverse:
        for j in range(w // 2):
            steps.append(swap(j, w - 1 - j))
        for k in range(w):
            for j in range(k):
                steps.append(cphase(j, k, -1.0))
            steps.append(h(k))
    else:
        for k in range(w - 1, -1, -1):
            steps.append(h(k))
            for j in range(k - 1, -1, -1):
                steps.append(cphase(j, k, +1.0))
        for j in range(w // 2):
            steps.append(swap(j, w - 1 - j))
    return steps


def lowered_pipeline(problem: PoissonProblem, config: HhlConfig):
    """Build the compact-mode pipeline as a flat list of steps with their
    noise opportunities; returns (layout, initial state, steps)."""
    if config.mode != "compact":
        raise ValueError("trajectory noise supports compact mode only")
    layout = layout_registers(problem.N, config)
    if layout.total_qubits > NOISY_QUBIT_BUDGET:
        raise BudgetExceededError(
            f"noisy run needs {layout.total_qubits} qubits, "
            f"trajectory budget is {NOISY_QUBIT_BUDGET}"
        )
    spectral = eigenpairs(problem.N)
    table = build_omega_table(layout)
    reg_b, reg_e = layout.reg_b, layout.reg_e
    block_cost = CostRules().controlled_dense_unitary(layout.n)

    steps: list[_Step] = []
    h = sv.hadamard()
    for qb in reg_e.qubits:
        steps.append(_Step(gate=sv.single_qubit(h, qb)))
    for k in range(layout.m):
        gate = sv.controlled_dense(_evolution_power(spectral, layout.format, k),
                                   targets=reg_b.qubits, controls=(reg_e.lo + k,))
        support = tuple([reg_e.lo + k] + reg_b.qubits)
        steps.append(_Step(gate=gate, random_support=support, random_events=block_cost))
    steps.extend(_qft_steps(reg_e, inverse=True))

    pairs = tuple((reg_e.lo + (t % layout.m), layout.ancilla)
                  for t in range(reg_e.size))
    rotation = sv.multiplexed_ry(reg_e, layout.ancilla, 2.0 * np.pi * table.omega)
    steps.append(_Step(gate=rotation, fixed_pairs=pairs))

    steps.extend(_qft_steps(reg_e, inverse=False))
    for k in reversed(range(layout.m)):
        gate = sv.controlled_dense(
            _evolution_power(spectral, layout.format, k).conj().T,
            targets=reg_b.qubits, controls=(reg_e.lo + k,))
        support = tuple([reg_e.lo + k] + reg_b.qubits)
        steps.append(_Step(gate=gate, random_support=support, random_events=block_cost))
    for qb in reg_e.qubits:
        steps.append(_Step(gate=sv.single_qubit(h, qb)))

    initial = sv.init_state(layout.total_qubits, {reg_b: problem.rhs})
    return layout, initial, steps


def _apply_pauli_pair(state, pair, pauli_index):
    # pauli_index in 1..15 maps to (P_a, P_b) != (I, I) over {I,X,Y,Z}^2
    a, b = divmod(int(pauli_index), 4)
    if a:
        state = sv.apply(state, _pauli_gate(a, pair[0]))
    if b:
        state = sv.apply(state, _pauli_gate(b, pair[1]))
    return state


@dataclass(frozen=True)
class NoisyResult:
    noisy_distribution: np.ndarray
    noiseless_distribution: np.ndarray
    trajectories: int
    skipped: int

    @property
    def leakage_probability(self) -> float:
        """Averaged post-selected probability of the reg-B all-zeros state
        (exactly 0 in a noiseless run)."""
        return float(self.noisy_distribution[0])


def noisy_trajectories(problem: PoissonProblem, config: HhlConfig,
                       noise: NoiseModel | None = None,
                       trajectories: int = 500, seed: int = 0) -> NoisyResult:
    """Average the post-selected reg-B distribution over noisy trajectories."""
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    noise = noise or NoiseModel()
    rate = noise.cnot_error_rate
    layout, initial, steps = lowered_pipeline(problem, config)
    reg_b, ancilla = layout.reg_b, layout.ancilla
    total_events = sum(step.events for step in steps)

    # Noiseless reference pass; cache per-step input states on small layouts
    # so each trajectory can fast-forward to its first firing event.
    cache_prefixes = layout.total_qubits <= _PREFIX_CACHE_QUBIT_LIMIT
    prefixes: list = []
    state = initial
    for step in steps:
        if cache_prefixes:
            prefixes.append(state)
        state = sv.apply(state, step.gate)
    clean_final, _ = sv.post_select(state, ancilla, 1)
    noiseless = sv.marginal_distribution(clean_final, reg_b)

    # event index of the first opportunity in each step
    step_event_start = np.cumsum([0] + [step.events for step in steps])[:-1]

    accumulated = np.zeros(reg_b.size)
    clean_hits = 0
    skipped = 0
    for t in range(trajectories):
        rng = np.random.default_rng((seed, t))
        fires = rng.random(total_events) < rate if rate > 0.0 else None
        if fires is None or not fires.any():
            clean_hits += 1
            continue
        first_fire = int(np.argmax(fires))
        start = int(np.searchsorted(step_event_start, first_fire, side="right")) - 1
        if cache_prefixes:
            state = prefixes[start]
        else:
            start = 0
            state = initial
        event = int(step_event_start[start])
        for step in steps[start:]:
            state = sv.apply(state, step.gate)
            for pair in step.fixed_pairs:
                if fires[event]:
                    state = _apply_pauli_pair(state, pair, rng.integers(1, 16))
                event += 1
            for _ in range(step.random_events):
                if fires[event]:
                    support = step.random_support
                    picked = rng.choice(len(support), size=2, replace=False)
                    pair = (support[picked[0]], support[picked[1]])
                    state = _apply_pauli_pair(state, pair, rng.integers(1, 16))
                event += 1
        try:
            selected, _ = sv.post_select(state, ancilla, 1)
        except ZeroProbabilityError:
            skipped += 1
            continue
        accumulated += sv.marginal_distribution(selected, reg_b)

    kept = trajectories - skipped
    if kept == 0:
        raise ZeroProbabilityError("every trajectory lost the post-selection branch")
    if clean_hits == kept:
        averaged = noiseless.copy()
    else:
        averaged = (accumulated + clean_hits * noiseless) / kept
    return NoisyResult(
        noisy_distribution=averaged,
        noiseless_distribution=noiseless,
        trajectories=trajectories,
        skipped=skipped,
    )
