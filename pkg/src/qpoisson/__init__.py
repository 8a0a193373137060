"""Quantum solver for the 1-D finite-difference Poisson equation.

The pipeline prepares the right-hand side in a quantum register, runs phase
estimation against the closed-form spectrum of the discretized Laplacian,
rotates an ancilla through precomputed angular coefficients, uncomputes, and
post-selects - producing a state proportional to the normalized solution.
Everything is simulated exactly on a dense statevector and checked against
two independent classical solvers.
"""

from .poisson import (PoissonProblem, SpectralData, TridiagonalMatrix,
                      benchmark_rhs, build_matrix, condition_number,
                      eigenpairs, flat_overlap_rhs, load_rhs, solve_spectral,
                      solve_thomas)
from .statevector import (Circuit, GateOp, QuantumState, Register,
                          ZeroProbabilityError, apply, apply_xor_lookup,
                          init_state, inverse_qft, marginal_distribution,
                          post_select)
from .hhl import (BudgetExceededError, FixedPointFormat, HhlConfig, HhlResult,
                  OmegaTable, RegisterLayout, build_omega_table,
                  controlled_rotation, embed_operator, layout_registers,
                  qpe_forward, run_hhl, uncompute)
from .analysis import ErrorReport, relative_errors, success_scaling
from .cost import (CostReport, CostRules, estimate_cost, hardware_fidelity,
                   hardware_fidelity_log10, hhl_circuit_elements)
from .noise import NoiseModel, NoisyResult, noisy_trajectories

__version__ = "0.1.0"
