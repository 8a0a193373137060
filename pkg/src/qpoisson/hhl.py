"""End-to-end HHL pipeline for the discretized Poisson system.

Register layout (qubit 0 = least significant):

    [0, n)            reg B   problem / solution amplitudes (n = log2 N)
    [n, n+m)          reg E   fixed-point eigenvalue estimate, m = 2n+2+f+i
    [n+m, n+m+l)      reg A   rotation angular coefficient (faithful mode only)
    n+m+l             ancilla rotated by Ry(2 pi omega) per eigenbranch

Reg E holds y with lambda_est = y / 2^(f+i): the top 2n+2 bits are the integer
part of the eigenvalue (lambda_max < 4 N^2 = 2^(2n+2) guarantees no overflow),
f bits are the fractional part, and the amplification exponent i shifts a
further i bits of precision into the register.  The rotation coefficient is
computed from the de-amplified estimate, so amplification changes precision
bookkeeping only - the post-selection probability is untouched.

Phase estimation evolves under U = exp(i A_bar t0) with t0 = 2 pi / 2^(2n+2),
where A_bar embeds the (N-1)-dimensional operator into the 2^n register with
a padded zero eigenvalue on basis state 0.  Each controlled power U^(2^k) is
synthesized exactly from the closed-form spectrum, so the only approximation
in the whole pipeline is the fixed-point readout itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .poisson import PoissonProblem, eigenpairs, is_power_of_two, solve_thomas, SpectralData
from .statevector import QuantumState, Register

DEFAULT_QUBIT_BUDGET = 30


class BudgetExceededError(RuntimeError):
    """Requested layout needs more qubits than the configured budget."""


@dataclass(frozen=True)
class FixedPointFormat:
    """Register-E encoding: value y represents lambda_est = y / 2^(frac_bits +
    amp_exponent), with int_bits = 2n+2 integer bits."""

    int_bits: int
    frac_bits: int
    amp_exponent: int

    @property
    def width(self) -> int:
        return self.int_bits + self.frac_bits + self.amp_exponent

    @property
    def scale(self) -> int:
        return 1 << (self.frac_bits + self.amp_exponent)


@dataclass(frozen=True)
class RegisterLayout:
    n: int
    m: int
    l: int
    mode: str
    format: FixedPointFormat

    @property
    def reg_b(self) -> Register:
        return Register(0, self.n)

    @property
    def reg_e(self) -> Register:
        return Register(self.n, self.m)

    @property
    def reg_a(self) -> Register | None:
        return Register(self.n + self.m, self.l) if self.l else None

    @property
    def ancilla(self) -> int:
        return self.n + self.m + self.l

    @property
    def total_qubits(self) -> int:
        return self.n + self.m + self.l + 1


@dataclass(frozen=True)
class HhlConfig:
    frac_bits: int = 0
    amp_exponent: int = 0
    reg_a_bits: int | None = None
    mode: str = "compact"
    qubit_budget: int = DEFAULT_QUBIT_BUDGET
    min_success_probability: float = 0.0

    def __post_init__(self):
        if self.frac_bits < 0 or self.amp_exponent < 0:
            raise ValueError("frac_bits and amp_exponent must be >= 0")
        if self.mode not in ("faithful", "compact"):
            raise ValueError(f"mode must be 'faithful' or 'compact', got {self.mode!r}")


def layout_registers(N: int, config: HhlConfig) -> RegisterLayout:
    """Size the registers for grid count N under the given configuration."""
    if N < 2 or not is_power_of_two(int(N)):
        raise ValueError(f"grid count N must be a power of two >= 2, got {N}")
    n = int(N).bit_length() - 1
    int_bits = 2 * n + 2
    m = int_bits + config.frac_bits + config.amp_exponent
    if config.mode == "faithful":
        l = max(config.reg_a_bits or 0, m)
    else:
        l = 0
    fmt = FixedPointFormat(int_bits=int_bits, frac_bits=config.frac_bits,
                           amp_exponent=config.amp_exponent)
    layout = RegisterLayout(n=n, m=m, l=l, mode=config.mode, format=fmt)
    if layout.total_qubits > config.qubit_budget:
        raise BudgetExceededError(
            f"layout needs {layout.total_qubits} qubits "
            f"(n={n}, m={m}, l={l}, ancilla=1), budget is {config.qubit_budget}"
        )
    return layout


def embed_operator(N: int) -> np.ndarray:
    """Extend the (N-1)-dim Laplacian to the full 2^n register: basis state 0
    is padded with eigenvalue 0, states 1..N-1 carry A."""
    spectral = eigenpairs(N)
    out = np.zeros((N, N))
    V = spectral.eigenvectors
    out[1:, 1:] = (V * spectral.lambdas) @ V.T
    return out


def _evolution_power(spectral: SpectralData, fmt: FixedPointFormat, k: int) -> np.ndarray:
    """U^(2^k) for U = exp(i A_bar t0), synthesized branch-by-branch.

    The per-branch phase fraction lambda_j 2^k / 2^int_bits is reduced mod 1
    before the complex exponential so dyadic eigenvalues stay exact even for
    large k.
    """
    N = spectral.N
    frac = (spectral.lambdas * float(2 ** k) / float(1 << fmt.int_bits)) % 1.0
    phases = np.exp(2j * np.pi * frac)
    V = spectral.eigenvectors.astype(np.complex128)
    U = np.zeros((N, N), dtype=np.complex128)
    U[0, 0] = 1.0
    U[1:, 1:] = (V * phases) @ V.conj().T
    return U


def qpe_forward(state: QuantumState, layout: RegisterLayout,
                spectral: SpectralData) -> QuantumState:
    """Phase estimation: Hadamards on reg E, controlled U^(2^k) powers, then
    the inverse Fourier block.  Eigenbranch j concentrates reg E on
    y = lambda_j * 2^(f+i)."""
    reg_b, reg_e = layout.reg_b, layout.reg_e
    h = sv.hadamard()
    for q in reg_e.qubits:
        state = sv.apply(state, sv.single_qubit(h, q))
    for k in range(layout.m):
        gate = sv.controlled_dense(_evolution_power(spectral, layout.format, k),
                                   targets=reg_b.qubits, controls=(reg_e.lo + k,))
        state = sv.apply(state, gate)
    return sv.apply(state, sv.qft_block(reg_e, inverse=True))


def _qpe_inverse(state: QuantumState, layout: RegisterLayout,
                 spectral: SpectralData) -> QuantumState:
    reg_b, reg_e = layout.reg_b, layout.reg_e
    state = sv.apply(state, sv.qft_block(reg_e, inverse=False))
    for k in reversed(range(layout.m)):
        gate = sv.controlled_dense(_evolution_power(spectral, layout.format, k).conj().T,
                                   targets=reg_b.qubits, controls=(reg_e.lo + k,))
        state = sv.apply(state, gate)
    h = sv.hadamard()
    for q in reg_e.qubits:
        state = sv.apply(state, sv.single_qubit(h, q))
    return state


@dataclass(frozen=True)
class OmegaTable:
    """Rotation angular coefficients for every register-E value.

    omega[y] = arccot(sqrt(lambda_est^2 - 1)) / pi for lambda_est = y / scale
    when lambda_est > 1, else 0; equivalently arcsin(1/lambda_est) / pi, so
    sin(pi * omega) = 1 / lambda_est.  omega_fp holds round(omega * 2^l)
    clamped to [0, 2^(l-1)] when an angle register is present.
    """

    omega: np.ndarray
    omega_fp: np.ndarray | None
    l: int

    def quantized(self) -> np.ndarray:
        if self.omega_fp is None:
            raise ValueError("table was built without an angle register")
        return self.omega_fp / float(1 << self.l)


def rotation_coefficients(lam_est) -> np.ndarray:
    """omega(lambda) = arccot(sqrt(lambda^2 - 1)) / pi = arcsin(1/lambda) / pi
    for lambda > 1, else 0; sin(pi * omega) is then exactly 1/lambda."""
    lam_est = np.asarray(lam_est, dtype=float)
    omega = np.zeros_like(lam_est)
    inv = np.reciprocal(lam_est, where=lam_est > 1.0, out=np.zeros_like(lam_est))
    np.arcsin(inv, where=lam_est > 1.0, out=omega)
    omega /= np.pi
    return omega


def build_omega_table(layout: RegisterLayout) -> OmegaTable:
    y = np.arange(1 << layout.m, dtype=float)
    omega = rotation_coefficients(y / layout.format.scale)
    omega.setflags(write=False)
    omega_fp = None
    if layout.l:
        omega_fp = np.rint(omega * (1 << layout.l)).astype(np.int64)
        np.clip(omega_fp, 0, 1 << (layout.l - 1), out=omega_fp)
        omega_fp.setflags(write=False)
    return OmegaTable(omega=omega, omega_fp=omega_fp, l=layout.l)


def controlled_rotation(state: QuantumState, layout: RegisterLayout,
                        table: OmegaTable) -> QuantumState:
    """Rotate the ancilla by Ry(2 pi omega) per eigenvalue branch.

    Faithful mode writes the fixed-point coefficient into reg A with the
    XOR-lookup oracle, then drives the ancilla with one controlled Ry per
    reg-A bit (bit p contributes angle 2 pi 2^(p-l)).  Compact mode applies
    the rotation multiplexed directly off the reg-E value with real-valued
    omega.
    """
    if layout.mode == "compact":
        gate = sv.multiplexed_ry(layout.reg_e, layout.ancilla, 2.0 * np.pi * table.omega)
        return sv.apply(state, gate)
    reg_a = layout.reg_a
    state = sv.apply(state, sv.xor_lookup(layout.reg_e, reg_a, table.omega_fp))
    for p in range(layout.l):
        angle = 2.0 * np.pi * 2.0 ** (p - layout.l)
        gate = sv.controlled_single_qubit(sv.ry(angle), layout.ancilla, (reg_a.lo + p,))
        state = sv.apply(state, gate)
    return state


def uncompute(state: QuantumState, layout: RegisterLayout, table: OmegaTable,
              spectral: SpectralData) -> QuantumState:
    """Return regs E and A to |0...0>: the lookup oracle is its own inverse,
    then the phase-estimation stage is reversed."""
    if layout.mode == "faithful":
        state = sv.apply(state, sv.xor_lookup(layout.reg_e, layout.reg_a, table.omega_fp))
    return _qpe_inverse(state, layout, spectral)


@dataclass(frozen=True)
class HhlResult:
    solution: np.ndarray
    success_probability: float
    classical_reference: np.ndarray
    relative_errors: np.ndarray
    state_fidelity: float
    layout: RegisterLayout
    diagnostics: dict


def _entropy(probs: np.ndarray) -> float:
    p = probs[probs > 0.0]
    return float(-np.sum(p * np.log2(p)))


def _align_to_reference(amplitudes: np.ndarray, reference: np.ndarray):
    """Remove the global phase so <reference|amplitudes> is real positive,
    then project onto the real axis; returns (real vector, imaginary residual)."""
    overlap = complex(np.vdot(reference, amplitudes))
    if abs(overlap) > 0.0:
        amplitudes = amplitudes * (abs(overlap) / overlap)
    imag_residual = float(np.linalg.norm(amplitudes.imag))
    return amplitudes.real.copy(), imag_residual


def run_hhl(problem: PoissonProblem, config: HhlConfig) -> HhlResult:
    """Execute prepare -> phase estimation -> controlled rotation ->
    uncompute -> post-select(ancilla=1) and read the solution off reg B."""
    t_start = time.perf_counter()
    layout = layout_registers(problem.N, config)
    spectral = eigenpairs(problem.N)
    table = build_omega_table(layout)

    state = sv.init_state(layout.total_qubits, {layout.reg_b: problem.rhs})
    state = qpe_forward(state, layout, spectral)
    state = controlled_rotation(state, layout, table)
    state = uncompute(state, layout, table, spectral)

    diagnostics = {}
    pe = sv.marginal_distribution(state, layout.reg_e)
    diagnostics["reg_e_residual"] = float(1.0 - pe[0])
    diagnostics["reg_e_entropy"] = _entropy(pe)
    if layout.reg_a is not None:
        pa = sv.marginal_distribution(state, layout.reg_a)
        diagnostics["reg_a_residual"] = float(1.0 - pa[0])
        diagnostics["reg_a_entropy"] = _entropy(pa)

    state, success = sv.post_select(state, layout.ancilla, 1)
    if success <= config.min_success_probability and config.min_success_probability > 0.0:
        raise sv.ZeroProbabilityError(
            f"post-selection probability {success:.3e} below configured minimum"
        )

    # Solution amplitudes: reg B conditioned on reg E (and reg A) back in |0>.
    fixed = {layout.ancilla: 1}
    conditional = sv.register_slice(state, layout.reg_b, fixed=fixed)
    cond_weight = float(np.sum(np.abs(conditional) ** 2))
    diagnostics["extraction_residual"] = float(1.0 - cond_weight)
    conditional /= np.sqrt(cond_weight)

    reference = solve_thomas(problem)
    reference = reference / np.linalg.norm(reference)
    aligned, imag_residual = _align_to_reference(conditional[1:], reference)
    diagnostics["imaginary_residual"] = imag_residual
    diagnostics["reg_b0_leakage"] = float(np.abs(conditional[0]) ** 2)
    norm = np.linalg.norm(aligned)
    if norm == 0.0:
        raise sv.ZeroProbabilityError("post-selected state has no interior support")
    solution = aligned / norm

    # components where the normalized reference is numerically zero carry no
    # meaningful relative error; they are flagged NaN (and reported separately)
    nonzero = np.abs(reference) > 1e-12
    errors = np.full(problem.N - 1, np.nan)
    errors[nonzero] = np.abs(solution[nonzero] - reference[nonzero]) / np.abs(reference[nonzero])
    fidelity = float(abs(np.dot(reference, solution)))
    diagnostics["wall_seconds"] = time.perf_counter() - t_start

    return HhlResult(
        solution=solution,
        success_probability=success,
        classical_reference=reference,
        relative_errors=errors,
        state_fidelity=fidelity,
        layout=layout,
        diagnostics=diagnostics,
    )
