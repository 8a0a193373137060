"""Deterministic dense statevector engine.

Conventions (fixed; tests assert them):

* Qubit 0 is the least-significant bit of the basis-state index, so basis
  state ``|q_{n-1} ... q_1 q_0>`` lives at index ``sum_k q_k 2^k``.
* A contiguous qubit range [lo, lo+width) forms a register whose value is
  read LSB-first from qubit ``lo``.
* ``targets`` of a dense gate are listed LSB-first: ``targets[p]`` carries
  bit p of the gate-matrix index.
* Controls trigger on |1>.
* The w-qubit Fourier block is F|x> = 2^{-w/2} sum_y exp(+2 pi i x y / 2^w)
  |y>; ``inverse-qft`` applies its adjoint.  For w = 1 both equal Hadamard.
* Ry follows Ry(2 theta)|0> = cos(theta)|0> + sin(theta)|1>.

Gate application is purely functional (a new state is returned) and
deterministic: identical inputs produce bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNITARY_TOL = 1e-12


class ZeroProbabilityError(RuntimeError):
    """Post-selection outcome has zero probability; the run must be restarted."""


@dataclass(frozen=True)
class Register:
    """Contiguous qubit range [lo, lo + width)."""

    lo: int
    width: int

    def __post_init__(self):
        if self.lo < 0 or self.width < 1:
            raise ValueError(f"invalid register lo={self.lo} width={self.width}")

    @property
    def hi(self) -> int:
        return self.lo + self.width

    @property
    def size(self) -> int:
        return 1 << self.width

    @property
    def qubits(self) -> list[int]:
        return list(range(self.lo, self.hi))


@dataclass(frozen=True)
class QuantumState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"state over {self.num_qubits} qubits needs {1 << self.num_qubits} "
                f"amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probability(self, basis_index: int) -> float:
        return float(np.abs(self.amplitudes[basis_index]) ** 2)


def _fresh(num_qubits: int, amplitudes: np.ndarray) -> QuantumState:
    amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
    amplitudes.setflags(write=False)
    return QuantumState(num_qubits=num_qubits, amplitudes=amplitudes)


# ---------------------------------------------------------------------------
# gates

# kind is one of: "single-qubit-unitary", "controlled-single-qubit-unitary",
# "controlled-dense-unitary", "xor-lookup", "inverse-qft", "qft",
# "multiplexed-ry".  The forward "qft" and the value-indexed "multiplexed-ry"
# are engine extensions: the first is the inverse of the inverse-qft block,
# the second drives the ancilla rotation keyed directly on a register value
# without materializing an angle register.
@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple = ()
    controls: tuple = ()
    matrix: np.ndarray | None = None
    source: Register | None = None
    dest: Register | None = None
    table: np.ndarray | None = None
    register: Register | None = None
    angles: np.ndarray | None = None

    def qubits(self) -> set[int]:
        qs = set(self.targets) | set(self.controls)
        for reg in (self.source, self.dest, self.register):
            if reg is not None:
                qs |= set(reg.qubits)
        return qs


def _check_unitary(matrix: np.ndarray, dim: int) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (dim, dim):
        raise ValueError(f"gate matrix must be {dim}x{dim}, got {matrix.shape}")
    defect = np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim)))
    if defect > UNITARY_TOL:
        raise ValueError(f"gate matrix is not unitary (max defect {defect:.3e})")
    matrix = matrix.copy()
    matrix.setflags(write=False)
    return matrix


def _check_disjoint(targets, controls) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    if len(set(controls)) != len(controls):
        raise ValueError(f"duplicate control qubits: {controls}")
    if set(targets) & set(controls):
        raise ValueError(f"targets {targets} and controls {controls} overlap")


def single_qubit(matrix, qubit: int) -> GateOp:
    return GateOp(kind="single-qubit-unitary", targets=(int(qubit),),
                  matrix=_check_unitary(matrix, 2))


def controlled_single_qubit(matrix, target: int, controls) -> GateOp:
    controls = tuple(int(c) for c in controls)
    if not controls:
        raise ValueError("controlled gate needs at least one control qubit")
    _check_disjoint((target,), controls)
    return GateOp(kind="controlled-single-qubit-unitary", targets=(int(target),),
                  controls=controls, matrix=_check_unitary(matrix, 2))


def controlled_dense(matrix, targets, controls=()) -> GateOp:
    targets = tuple(int(t) for t in targets)
    controls = tuple(int(c) for c in controls)
    if not targets:
        raise ValueError("dense gate needs at least one target qubit")
    _check_disjoint(targets, controls)
    return GateOp(kind="controlled-dense-unitary", targets=targets, controls=controls,
                  matrix=_check_unitary(matrix, 1 << len(targets)))


def xor_lookup(source: Register, dest: Register, table) -> GateOp:
    """Basis map |y>_src |a>_dst -> |y>_src |a XOR table[y]>_dst (self-inverse).

    The table must cover every source value 0 .. 2^src.width - 1 and every
    entry must fit in the destination width.
    """
    if set(source.qubits) & set(dest.qubits):
        raise ValueError("source and dest registers overlap")
    table = np.asarray(table)
    if table.shape != (source.size,):
        raise ValueError(
            f"lookup table must cover all {source.size} source values, got shape {table.shape}"
        )
    if not np.issubdtype(table.dtype, np.integer):
        raise ValueError("lookup table entries must be integers")
    table = table.astype(np.int64)
    if table.min() < 0 or int(table.max()).bit_length() > dest.width:
        raise ValueError(
            f"lookup entries must fit in {dest.width} destination bits "
            f"(max entry {int(table.max())})"
        )
    table.setflags(write=False)
    return GateOp(kind="xor-lookup", source=source, dest=dest, table=table)


def qft_block(register: Register, inverse: bool = True) -> GateOp:
    return GateOp(kind="inverse-qft" if inverse else "qft", register=register)


def multiplexed_ry(selector: Register, target: int, angles) -> GateOp:
    """Apply Ry(angles[y]) to ``target`` on each branch where ``selector``
    holds value y."""
    if int(target) in selector.qubits:
        raise ValueError("multiplexer target must not be inside the selector register")
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (selector.size,):
        raise ValueError(
            f"need one angle per selector value ({selector.size}), got shape {angles.shape}"
        )
    angles = angles.copy()
    angles.setflags(write=False)
    return GateOp(kind="multiplexed-ry", register=selector, targets=(int(target),),
                  angles=angles)


def inverse_gate(gate: GateOp) -> GateOp:
    """Exact inverse of any engine gate (used by uncompute and round-trip tests)."""
    if gate.kind in ("single-qubit-unitary", "controlled-single-qubit-unitary",
                     "controlled-dense-unitary"):
        return GateOp(kind=gate.kind, targets=gate.targets, controls=gate.controls,
                      matrix=_check_unitary(gate.matrix.conj().T, gate.matrix.shape[0]))
    if gate.kind == "xor-lookup":
        return gate
    if gate.kind in ("inverse-qft", "qft"):
        return qft_block(gate.register, inverse=(gate.kind == "qft"))
    if gate.kind == "multiplexed-ry":
        return multiplexed_ry(gate.register, gate.targets[0], -gate.angles)
    raise ValueError(f"unknown gate kind {gate.kind!r}")


# common matrices
def hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def pauli(which: str) -> np.ndarray:
    return {
        "I": np.eye(2, dtype=np.complex128),
        "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
        "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    }[which]


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def phase(angle: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * angle)]], dtype=np.complex128)


# ---------------------------------------------------------------------------
# state construction

def init_state(num_qubits: int, register_assignments=None) -> QuantumState:
    """Product state from per-register amplitude vectors.

    ``register_assignments`` maps Register -> unit-norm amplitude vector
    (length 2^width); unassigned qubits default to |0>.
    """
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    assignments = []
    if register_assignments:
        items = (register_assignments.items()
                 if hasattr(register_assignments, "items") else register_assignments)
        for reg, vec in items:
            vec = np.asarray(vec, dtype=np.complex128)
            if reg.hi > num_qubits:
                raise ValueError(f"register {reg} exceeds {num_qubits} qubits")
            if vec.shape != (reg.size,):
                raise ValueError(
                    f"register {reg} needs {reg.size} amplitudes, got shape {vec.shape}"
                )
            err = abs(np.linalg.norm(vec) - 1.0)
            if err > 1e-10:
                raise ValueError(f"register assignment is not normalized (off by {err:.3e})")
            assignments.append((reg, vec))
    assignments.sort(key=lambda item: item[0].lo)
    for (a, _), (b, _) in zip(assignments, assignments[1:]):
        if b.lo < a.hi:
            raise ValueError(f"register assignments {a} and {b} overlap")

    # kron() composes most-significant factor first; walk registers downward.
    state = np.ones(1, dtype=np.complex128)
    cursor = num_qubits
    for reg, vec in reversed(assignments):
        gap = cursor - reg.hi
        if gap:
            zeros = np.zeros(1 << gap, dtype=np.complex128)
            zeros[0] = 1.0
            state = np.kron(state, zeros)
        state = np.kron(state, vec)
        cursor = reg.lo
    if cursor:
        zeros = np.zeros(1 << cursor, dtype=np.complex128)
        zeros[0] = 1.0
        state = np.kron(state, zeros)
    return _fresh(num_qubits, state)


# ---------------------------------------------------------------------------
# gate application

def _axis(num_qubits: int, qubit: int) -> int:
    # C-order reshape to [2]*n puts the most significant bit on axis 0.
    return num_qubits - 1 - qubit


def _apply_1q(amps: np.ndarray, num_qubits: int, matrix: np.ndarray,
              qubit: int) -> np.ndarray:
    work = amps.reshape(1 << (num_qubits - 1 - qubit), 2, 1 << qubit)
    out = np.empty_like(work)
    out[:, 0] = matrix[0, 0] * work[:, 0] + matrix[0, 1] * work[:, 1]
    out[:, 1] = matrix[1, 0] * work[:, 0] + matrix[1, 1] * work[:, 1]
    return out.reshape(-1)


def _apply_c1q(amps: np.ndarray, num_qubits: int, matrix: np.ndarray,
               target: int, control: int) -> np.ndarray:
    qh, ql = max(target, control), min(target, control)
    out = amps.copy().reshape(1 << (num_qubits - 1 - qh), 2,
                              1 << (qh - ql - 1), 2, 1 << ql)
    if control == qh:
        a0 = out[:, 1, :, 0].copy()
        a1 = out[:, 1, :, 1]
        out[:, 1, :, 0] = matrix[0, 0] * a0 + matrix[0, 1] * a1
        out[:, 1, :, 1] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    else:
        a0 = out[:, 0, :, 1].copy()
        a1 = out[:, 1, :, 1]
        out[:, 0, :, 1] = matrix[0, 0] * a0 + matrix[0, 1] * a1
        out[:, 1, :, 1] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    return out.reshape(-1)


def _apply_dense_general(amps: np.ndarray, num_qubits: int, matrix: np.ndarray,
                         targets, controls) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape([2] * num_qubits)
    ctrl_axes = [_axis(num_qubits, q) for q in controls]
    # targets LSB-first: put targets[0] on the fastest axis so flattening the
    # target block yields the matrix index sum_p bit_p 2^p.
    tgt_axes = [_axis(num_qubits, q) for q in reversed(targets)]
    other = [ax for ax in range(num_qubits)
             if ax not in ctrl_axes and ax not in tgt_axes]
    perm = ctrl_axes + other + tgt_axes
    work = np.transpose(psi, perm).copy()
    block = work[(1,) * len(ctrl_axes)].reshape(-1, 1 << k)
    block[...] = block @ matrix.T
    return np.transpose(work, np.argsort(perm)).reshape(-1)


def _apply_dense(amps: np.ndarray, num_qubits: int, matrix: np.ndarray,
                 targets, controls) -> np.ndarray:
    if len(targets) == 1:
        if not controls:
            return _apply_1q(amps, num_qubits, matrix, targets[0])
        if len(controls) == 1:
            return _apply_c1q(amps, num_qubits, matrix, targets[0], controls[0])
    return _apply_dense_general(amps, num_qubits, matrix, targets, controls)


def _apply_xor_lookup(amps: np.ndarray, num_qubits: int, source: Register,
                      dest: Register, table: np.ndarray) -> np.ndarray:
    idx = np.arange(1 << num_qubits, dtype=np.int64)
    src_val = (idx >> source.lo) & (source.size - 1)
    flips = table[src_val] << dest.lo
    return amps[idx ^ flips]


def _apply_qft(amps: np.ndarray, num_qubits: int, register: Register,
               inverse: bool) -> np.ndarray:
    d = register.size
    high = 1 << (num_qubits - register.hi)
    low = 1 << register.lo
    work = amps.reshape(high, d, low)
    # F acts as a sqrt(d)-scaled inverse DFT on the register value axis, so
    # its adjoint (the inverse-qft block) is the forward DFT / sqrt(d).
    if inverse:
        out = np.fft.fft(work, axis=1) / np.sqrt(d)
    else:
        out = np.fft.ifft(work, axis=1) * np.sqrt(d)
    return out.reshape(-1)


def _apply_multiplexed_ry(amps: np.ndarray, num_qubits: int, selector: Register,
                          target: int, angles: np.ndarray) -> np.ndarray:
    psi = amps.reshape([2] * num_qubits)
    tgt_axis = _axis(num_qubits, target)
    sel_axes = [_axis(num_qubits, q) for q in reversed(selector.qubits)]
    other = [ax for ax in range(num_qubits)
             if ax != tgt_axis and ax not in sel_axes]
    perm = other + sel_axes + [tgt_axis]
    work = np.transpose(psi, perm).copy().reshape(-1, selector.size, 2)
    c = np.cos(angles / 2.0)
    s = np.sin(angles / 2.0)
    a0 = work[:, :, 0].copy()
    a1 = work[:, :, 1]
    work[:, :, 0] = c * a0 - s * a1
    work[:, :, 1] = s * a0 + c * a1
    shape = [2] * num_qubits
    return np.transpose(work.reshape(shape), np.argsort(perm)).reshape(-1)


def apply(state: QuantumState, gate: GateOp) -> QuantumState:
    """Apply a gate; returns a new state, preserving the norm."""
    n = state.num_qubits
    bad = [q for q in gate.qubits() if q < 0 or q >= n]
    if bad:
        raise ValueError(f"gate references qubits {bad} outside 0..{n - 1}")
    amps = state.amplitudes
    if gate.kind in ("single-qubit-unitary", "controlled-single-qubit-unitary",
                     "controlled-dense-unitary"):
        out = _apply_dense(amps, n, gate.matrix, gate.targets, gate.controls)
    elif gate.kind == "xor-lookup":
        out = _apply_xor_lookup(amps, n, gate.source, gate.dest, gate.table)
    elif gate.kind in ("inverse-qft", "qft"):
        out = _apply_qft(amps, n, gate.register, gate.kind == "inverse-qft")
    elif gate.kind == "multiplexed-ry":
        out = _apply_multiplexed_ry(amps, n, gate.register, gate.targets[0], gate.angles)
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return _fresh(n, out)


def apply_all(state: QuantumState, gates) -> QuantumState:
    for gate in gates:
        state = apply(state, gate)
    return state


def apply_xor_lookup(state: QuantumState, source: Register, dest: Register,
                     table) -> QuantumState:
    return apply(state, xor_lookup(source, dest, table))


def inverse_qft(state: QuantumState, register: Register) -> QuantumState:
    return apply(state, qft_block(register, inverse=True))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for op in self.ops:
            bad = [q for q in op.qubits() if q < 0 or q >= self.num_qubits]
            if bad:
                raise ValueError(
                    f"op {op.kind} references qubits {bad} outside 0..{self.num_qubits - 1}"
                )

    def run(self, state: QuantumState | None = None) -> QuantumState:
        if state is None:
            state = init_state(self.num_qubits)
        if state.num_qubits != self.num_qubits:
            raise ValueError("state width does not match circuit width")
        return apply_all(state, self.ops)


# ---------------------------------------------------------------------------
# measurement-style readout

def post_select(state: QuantumState, qubit: int, outcome: int):
    """Condition on ``qubit`` = ``outcome``; returns (renormalized state,
    outcome probability).  Zero probability raises ZeroProbabilityError."""
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} outside 0..{n - 1}")
    ax = _axis(n, qubit)
    psi = state.amplitudes.reshape([2] * n)
    sel = [slice(None)] * n
    sel[ax] = outcome
    kept = psi[tuple(sel)]
    prob = float(np.sum(np.abs(kept) ** 2))
    if prob <= 0.0:
        raise ZeroProbabilityError(
            f"outcome {outcome} on qubit {qubit} has zero probability; restart required"
        )
    out = np.zeros_like(psi)
    out[tuple(sel)] = kept / np.sqrt(prob)
    return _fresh(n, out.reshape(-1)), prob


def marginal_distribution(state: QuantumState, register: Register) -> np.ndarray:
    """Probabilities over the register's 2^width values (sums to 1)."""
    n = state.num_qubits
    if register.hi > n:
        raise ValueError(f"register {register} exceeds {n} qubits")
    high = 1 << (n - register.hi)
    low = 1 << register.lo
    probs = np.abs(state.amplitudes.reshape(high, register.size, low)) ** 2
    return probs.sum(axis=(0, 2))


def register_slice(state: QuantumState, register: Register,
                   fixed: dict | None = None) -> np.ndarray:
    """Amplitude vector over the register's values with every other qubit
    pinned (default |0>); used to read conditional register contents."""
    n = state.num_qubits
    base = 0
    if fixed:
        for qubit, bit in fixed.items():
            base |= int(bit) << int(qubit)
    idx = base + (np.arange(register.size) << register.lo)
    return state.amplitudes[idx].copy()
