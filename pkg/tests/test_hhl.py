"""Pipeline stages: layout, embedding, phase estimation, rotation, uncompute,
and the end-to-end run."""

import numpy as np
import pytest

import qpoisson.statevector as sv
from qpoisson.hhl import (BudgetExceededError, HhlConfig, OmegaTable,
                          build_omega_table, controlled_rotation,
                          embed_operator, layout_registers, qpe_forward,
                          rotation_coefficients, run_hhl, uncompute)
from qpoisson.poisson import PoissonProblem, benchmark_rhs, eigenpairs
from qpoisson.statevector import Register, marginal_distribution


def eigenvector_problem(N, j):
    """Problem whose rhs is eigenvector u_j (1-based)."""
    u = eigenpairs(N).eigenvectors[:, j - 1]
    return PoissonProblem(N, np.concatenate(([0.0], u)))


class TestLayout:
    def test_bare_sizing(self):
        layout = layout_registers(4, HhlConfig())
        assert (layout.n, layout.m) == (2, 6)
        assert layout.format.int_bits == 6

    def test_faithful_total(self):
        cfg = HhlConfig(frac_bits=2, amp_exponent=2, mode="faithful")
        layout = layout_registers(4, cfg)
        assert (layout.n, layout.m, layout.l) == (2, 10, 10)
        assert layout.total_qubits == 23

    def test_compact_amplified(self):
        layout = layout_registers(8, HhlConfig(amp_exponent=4))
        assert (layout.n, layout.m, layout.l) == (3, 12, 0)
        assert layout.total_qubits == 16

    def test_register_placement(self):
        layout = layout_registers(4, HhlConfig(mode="faithful"))
        assert layout.reg_b.qubits == [0, 1]
        assert layout.reg_e.qubits == list(range(2, 8))
        assert layout.reg_a.qubits == list(range(8, 14))
        assert layout.ancilla == 14

    def test_reg_a_width_override(self):
        cfg = HhlConfig(mode="faithful", reg_a_bits=9)
        assert layout_registers(4, cfg).l == 9
        cfg = HhlConfig(mode="faithful", reg_a_bits=3)
        assert layout_registers(4, cfg).l == 6  # never below m

    def test_budget_rejection(self):
        with pytest.raises(BudgetExceededError):
            layout_registers(8, HhlConfig(frac_bits=8, amp_exponent=8, mode="faithful"))
        with pytest.raises(BudgetExceededError):
            layout_registers(8, HhlConfig(frac_bits=4, qubit_budget=12))

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            layout_registers(6, HhlConfig())


class TestEmbedOperator:
    def test_single_point(self):
        U = embed_operator(2)
        assert np.allclose(U, np.diag([0.0, 8.0]), atol=1e-12)

    def test_spectrum_padded_with_zero(self):
        w = np.linalg.eigvalsh(embed_operator(4))
        expected = np.concatenate(([0.0], eigenpairs(4).lambdas))
        assert np.allclose(np.sort(w), expected, atol=1e-10)

    def test_block_structure(self):
        U = embed_operator(4)
        assert np.all(U[0, :] == 0.0)
        assert np.all(U[:, 0] == 0.0)
        spec = eigenpairs(4)
        for j in range(3):
            u = np.concatenate(([0.0], spec.eigenvectors[:, j]))
            assert np.allclose(U @ u, spec.lambdas[j] * u, atol=1e-10)


class TestOmegaTable:
    def test_coefficient_at_32(self):
        assert rotation_coefficients(32.0) == pytest.approx(0.0099488, abs=1e-7)

    def test_coefficient_at_lambda1(self):
        assert rotation_coefficients(9.372583) == pytest.approx(0.034026, abs=1e-6)

    def test_zero_at_and_below_one(self):
        assert np.all(rotation_coefficients([0.0, 0.5, 1.0]) == 0.0)

    def test_inverts_exactly(self):
        lam = np.array([8.0, 32.0, 54.627417, 246.0])
        assert np.allclose(np.sin(np.pi * rotation_coefficients(lam)), 1.0 / lam,
                           atol=1e-15)

    def test_fixed_point_rounding(self):
        layout = layout_registers(4, HhlConfig(mode="faithful", reg_a_bits=8))
        table = build_omega_table(layout)
        assert table.l == 8
        assert table.omega_fp[32] == 3
        assert table.omega_fp[0] == 0

    def test_monotone_above_one(self):
        layout = layout_registers(4, HhlConfig())
        omega = build_omega_table(layout).omega
        above = omega[2:]  # lambda_est >= 2 at scale 1
        assert np.all(np.diff(above) <= 0.0)

    def test_clamp_bound(self):
        layout = layout_registers(2, HhlConfig(mode="faithful"))
        table = build_omega_table(layout)
        assert table.omega_fp.max() <= 1 << (table.l - 1)

    def test_compact_has_no_fixed_point(self):
        layout = layout_registers(4, HhlConfig())
        assert build_omega_table(layout).omega_fp is None


class TestEvolutionPowers:
    def test_matches_numerical_exponential(self):
        # dual route: closed-form synthesis vs exp(i A_bar t0) via eigh
        from qpoisson.hhl import FixedPointFormat, _evolution_power
        for N in (2, 4, 8):
            fmt = FixedPointFormat(int_bits=2 * (N.bit_length() - 1) + 2,
                                   frac_bits=0, amp_exponent=0)
            t0 = 2.0 * np.pi / (1 << fmt.int_bits)
            w, P = np.linalg.eigh(embed_operator(N))
            for k in (0, 1, 3):
                direct = (P * np.exp(1j * w * t0 * 2 ** k)) @ P.conj().T
                assert np.max(np.abs(_evolution_power(eigenpairs(N), fmt, k) - direct)) < 1e-10

    def test_unitary_for_large_powers(self):
        from qpoisson.hhl import FixedPointFormat, _evolution_power
        fmt = FixedPointFormat(int_bits=10, frac_bits=4, amp_exponent=4)
        U = _evolution_power(eigenpairs(16), fmt, 17)
        assert np.max(np.abs(U.conj().T @ U - np.eye(16))) < 1e-12


class TestQpeForward:
    def run_qpe(self, problem, config):
        layout = layout_registers(problem.N, config)
        spectral = eigenpairs(problem.N)
        state = sv.init_state(layout.total_qubits, {layout.reg_b: problem.rhs})
        return layout, qpe_forward(state, layout, spectral)

    def test_exact_branch_concentrates(self):
        layout, state = self.run_qpe(eigenvector_problem(4, 2), HhlConfig())
        probs = marginal_distribution(state, layout.reg_e)
        assert probs[32] == pytest.approx(1.0, abs=1e-10)

    def test_amplification_shifts_value(self):
        layout, state = self.run_qpe(eigenvector_problem(4, 2),
                                     HhlConfig(amp_exponent=2))
        probs = marginal_distribution(state, layout.reg_e)
        assert probs[128] == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("frac_bits", [0, 1, 3])
    def test_n2_dyadic_for_any_precision(self, frac_bits):
        problem = PoissonProblem(2, [0.0, 1.0])
        layout, state = self.run_qpe(problem, HhlConfig(frac_bits=frac_bits))
        probs = marginal_distribution(state, layout.reg_e)
        assert probs[8 << frac_bits] == pytest.approx(1.0, abs=1e-10)


class TestControlledRotation:
    def test_branch_amplitude_is_inverse_eigenvalue(self):
        problem = eigenvector_problem(4, 2)
        config = HhlConfig()
        layout = layout_registers(4, config)
        spectral = eigenpairs(4)
        table = build_omega_table(layout)
        state = sv.init_state(layout.total_qubits, {layout.reg_b: problem.rhs})
        state = controlled_rotation(qpe_forward(state, layout, spectral), layout, table)
        probs = marginal_distribution(state, Register(layout.ancilla, 1))
        assert probs[1] == pytest.approx(1.0 / 1024.0, abs=1e-9)

    def test_zero_coefficient_leaves_ancilla_alone(self):
        layout = layout_registers(4, HhlConfig())
        table = build_omega_table(layout)
        # reg E stays |0>, whose coefficient is 0
        state = sv.init_state(layout.total_qubits,
                              {layout.reg_b: benchmark_rhs(4)})
        out = controlled_rotation(state, layout, table)
        assert np.array_equal(out.amplitudes, state.amplitudes)

    def test_faithful_converges_to_compact(self):
        problem = PoissonProblem(4, benchmark_rhs(4))
        compact = run_hhl(problem, HhlConfig())
        scaled = []
        for l in (6, 10, 14):
            faithful = run_hhl(problem, HhlConfig(mode="faithful", reg_a_bits=l))
            diff = np.linalg.norm(faithful.solution - compact.solution)
            assert diff <= 4.0 * 2.0 ** (-l)
            scaled.append(diff * 2.0 ** l)
        # quantization error shrinks like C * 2^-l with bounded fitted C
        assert max(scaled) < 8.0


class TestUncompute:
    def test_exact_branch_returns_registers(self):
        result = run_hhl(eigenvector_problem(4, 2), HhlConfig())
        assert abs(result.diagnostics["reg_e_residual"]) < 1e-10
        assert result.diagnostics["reg_e_entropy"] < 1e-10

    def test_faithful_exact_branch_clears_reg_a(self):
        result = run_hhl(eigenvector_problem(4, 2), HhlConfig(mode="faithful"))
        assert abs(result.diagnostics["reg_a_residual"]) < 1e-10

    def test_zero_rotation_round_trips_pipeline(self):
        problem = PoissonProblem(4, benchmark_rhs(4))
        config = HhlConfig()
        layout = layout_registers(4, config)
        spectral = eigenpairs(4)
        zero_table = OmegaTable(omega=np.zeros(1 << layout.m), omega_fp=None, l=0)
        initial = sv.init_state(layout.total_qubits, {layout.reg_b: problem.rhs})
        state = qpe_forward(initial, layout, spectral)
        state = controlled_rotation(state, layout, zero_table)
        state = uncompute(state, layout, zero_table, spectral)
        assert np.max(np.abs(state.amplitudes - initial.amplitudes)) < 1e-10

    def test_n2_always_exact(self):
        result = run_hhl(PoissonProblem(2, [0.0, 1.0]),
                         HhlConfig(frac_bits=2, amp_exponent=1))
        assert abs(result.diagnostics["reg_e_residual"]) < 1e-12


class TestRunHhl:
    def test_benchmark_solution(self):
        problem = PoissonProblem(4, benchmark_rhs(4))
        result = run_hhl(problem, HhlConfig(frac_bits=4, amp_exponent=4))
        assert np.allclose(result.solution, [0.55299, 0.67407, 0.48974], atol=1e-4)
        assert result.state_fidelity > 0.999
        assert abs(np.linalg.norm(result.solution) - 1.0) < 1e-10

    def test_exact_branch_end_to_end(self):
        result = run_hhl(eigenvector_problem(4, 2), HhlConfig())
        u2 = eigenpairs(4).eigenvectors[:, 1]
        assert np.max(np.abs(result.solution - u2)) < 1e-9
        assert result.success_probability == pytest.approx(1.0 / 1024.0, abs=1e-9)

    def test_relative_error_excludes_zero_reference(self):
        # u_2 has a zero middle component; its relative error is flagged NaN
        result = run_hhl(eigenvector_problem(4, 2), HhlConfig())
        assert np.isnan(result.relative_errors[1])
        assert np.all(result.relative_errors[[0, 2]] < 1e-9)

    def test_linearity_exact_for_exact_scale(self):
        rhs = benchmark_rhs(4)
        a = run_hhl(PoissonProblem(4, rhs), HhlConfig(frac_bits=2))
        b = run_hhl(PoissonProblem(4, 4.0 * rhs), HhlConfig(frac_bits=2))
        assert np.array_equal(a.solution, b.solution)

    def test_linearity_general_scale(self):
        rhs = benchmark_rhs(4)
        a = run_hhl(PoissonProblem(4, rhs), HhlConfig(frac_bits=2))
        b = run_hhl(PoissonProblem(4, 3.7 * rhs), HhlConfig(frac_bits=2))
        assert np.allclose(a.solution, b.solution, atol=1e-12)
        assert a.success_probability == pytest.approx(b.success_probability, rel=1e-12)

    def test_amplification_is_pure_bookkeeping(self):
        problem = PoissonProblem(4, benchmark_rhs(4))
        a = run_hhl(problem, HhlConfig(frac_bits=2, amp_exponent=6))
        b = run_hhl(problem, HhlConfig(frac_bits=8, amp_exponent=0))
        assert np.array_equal(a.solution, b.solution)
        assert a.success_probability == b.success_probability

    def test_error_shrinks_with_precision(self):
        for N in (4, 8):
            problem = PoissonProblem(N, benchmark_rhs(N))
            errs = [np.nanmax(run_hhl(problem, HhlConfig(frac_bits=f)).relative_errors)
                    for f in (0, 4, 8)]
            assert errs[1] <= 0.75 * errs[0]
            assert errs[2] <= 0.75 * errs[1]

    def test_success_probability_matches_spectral_sum(self):
        problem = PoissonProblem(4, benchmark_rhs(4))
        spec = eigenpairs(4)
        beta = spec.eigenvectors.T @ problem.interior
        expected = float(np.sum(beta ** 2 / spec.lambdas ** 2))
        result = run_hhl(problem, HhlConfig(frac_bits=4, amp_exponent=4))
        assert result.success_probability == pytest.approx(expected, rel=1e-3)

    def test_concurrent_runs_agree(self):
        from concurrent.futures import ThreadPoolExecutor
        problem = PoissonProblem(4, benchmark_rhs(4))
        config = HhlConfig(frac_bits=2)
        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(lambda _: run_hhl(problem, config), range(4)))
        for result in results[1:]:
            assert np.array_equal(result.solution, results[0].solution)
