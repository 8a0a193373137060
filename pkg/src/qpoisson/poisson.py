"""Discretized 1-D Poisson problem on the unit interval with Dirichlet
boundary conditions.

The operator -d^2/dx^2 on N uniform intervals (mesh width h = 1/N) becomes the
(N-1)-dimensional tridiagonal matrix A with diagonal 2/h^2 and off-diagonal
-1/h^2.  Its spectrum is known in closed form, which this module exposes next
to two independent classical solvers (Thomas elimination and spectral
synthesis) used as accuracy oracles for the quantum pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_grid(N: int) -> None:
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool):
        raise ValueError(f"grid count N must be an integer, got {N!r}")
    if N < 2 or not is_power_of_two(int(N)):
        raise ValueError(f"grid count N must be a power of two >= 2, got {N}")


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric constant-coefficient tridiagonal operator."""

    dim: int
    diagonal: float
    off_diagonal: float

    def dense(self) -> np.ndarray:
        M = np.zeros((self.dim, self.dim))
        np.fill_diagonal(M, self.diagonal)
        idx = np.arange(self.dim - 1)
        M[idx, idx + 1] = self.off_diagonal
        M[idx + 1, idx] = self.off_diagonal
        return M

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        return out


def build_matrix(N: int) -> TridiagonalMatrix:
    """Finite-difference Laplacian for N intervals: diag 2N^2, off-diag -N^2."""
    _check_grid(N)
    n2 = float(N) * float(N)
    return TridiagonalMatrix(dim=N - 1, diagonal=2.0 * n2, off_diagonal=-n2)


@dataclass(frozen=True)
class SpectralData:
    """Closed-form eigensystem of the discretized Laplacian.

    lambdas[j-1] = 4 N^2 sin^2(j pi / 2N), strictly increasing in j.
    eigenvectors column j-1 holds u_j with u_j(k) = sqrt(2/N) sin(j pi k / N);
    the columns are exactly orthonormal.  kappa = lambda_max / lambda_min.
    """

    N: int
    lambdas: np.ndarray
    eigenvectors: np.ndarray
    kappa: float


def eigenpairs(N: int) -> SpectralData:
    _check_grid(N)
    j = np.arange(1, N, dtype=float)
    lambdas = 4.0 * N * N * np.sin(j * np.pi / (2.0 * N)) ** 2
    k = np.arange(1, N, dtype=float)[:, None]
    eigenvectors = np.sqrt(2.0 / N) * np.sin(j[None, :] * k * np.pi / N)
    lambdas.setflags(write=False)
    eigenvectors.setflags(write=False)
    return SpectralData(
        N=int(N),
        lambdas=lambdas,
        eigenvectors=eigenvectors,
        kappa=float(lambdas[-1] / lambdas[0]),
    )


def condition_number(spectral: SpectralData) -> float:
    return float(spectral.lambdas[-1] / spectral.lambdas[0])


class PoissonProblem:
    """Right-hand side of the discrete Poisson system, stored as the full
    2^n-amplitude register input (n = log2 N).

    The constructor normalizes the vector to unit Euclidean norm (the quantum
    register requires it) and keeps the pre-normalization norm in ``scale`` so
    classical output can be reported un-normalized.  Index 0 is the padding
    slot of the register and must be exactly zero; entries 1..N-1 are the
    interior amplitudes b_1..b_{N-1}.  Only real inputs are accepted.
    """

    def __init__(self, N: int, rhs) -> None:
        _check_grid(N)
        rhs = np.asarray(rhs)
        if np.iscomplexobj(rhs):
            raise ValueError("rhs must be real-valued")
        rhs = np.array(rhs, dtype=float)
        if rhs.shape != (N,):
            raise ValueError(f"rhs must have exactly N={N} entries, got shape {rhs.shape}")
        if rhs[0] != 0.0:
            raise ValueError("rhs[0] must be exactly 0 (boundary slot of the register)")
        scale = float(np.linalg.norm(rhs))
        if scale == 0.0:
            raise ValueError("rhs must not be the zero vector")
        self.N = int(N)
        self.h = 1.0 / N
        self.scale = scale
        self.rhs = rhs / scale
        self.rhs.setflags(write=False)

    @property
    def n(self) -> int:
        """Register width: log2(N)."""
        return self.N.bit_length() - 1

    @property
    def interior(self) -> np.ndarray:
        """Normalized interior amplitudes b_1..b_{N-1}."""
        return self.rhs[1:]

    def __repr__(self) -> str:
        return f"PoissonProblem(N={self.N}, scale={self.scale:g})"


def thomas_solve(matrix: TridiagonalMatrix, b: np.ndarray) -> np.ndarray:
    """Thomas elimination for a symmetric constant-coefficient tridiagonal
    system.  A is positive definite here, so no pivoting is needed."""
    b = np.asarray(b, dtype=float)
    dim = matrix.dim
    if b.shape != (dim,):
        raise ValueError(f"b must have {dim} entries, got shape {b.shape}")
    a, c = matrix.diagonal, matrix.off_diagonal
    d = np.empty(dim)
    y = np.empty(dim)
    d[0] = a
    y[0] = b[0]
    for i in range(1, dim):
        w = c / d[i - 1]
        d[i] = a - w * c
        y[i] = b[i] - w * y[i - 1]
    x = np.empty(dim)
    x[-1] = y[-1] / d[-1]
    for i in range(dim - 2, -1, -1):
        x[i] = (y[i] - c * x[i + 1]) / d[i]
    return x


def solve_thomas(problem: PoissonProblem) -> np.ndarray:
    """Classical oracle #1: direct elimination on A v = b_interior."""
    return thomas_solve(build_matrix(problem.N), problem.interior)


def solve_spectral(problem: PoissonProblem) -> np.ndarray:
    """Classical oracle #2: v = sum_j (beta_j / lambda_j) u_j with
    beta_j = <u_j, b_interior>."""
    spectral = eigenpairs(problem.N)
    beta = spectral.eigenvectors.T @ problem.interior
    return spectral.eigenvectors @ (beta / spectral.lambdas)


def benchmark_rhs(N: int) -> np.ndarray:
    """Bundled benchmark inputs for the standard problem sizes.

    N=2:  (0, 1)
    N=4:  (0, 1/sqrt(2), 1/2, 1/2)
    N=8:  (0, 1/4, 1/4, 1/4, 1/4, 1/2, 1/2, 1/2)
    """
    if N == 2:
        return np.array([0.0, 1.0])
    if N == 4:
        return np.array([0.0, 1.0 / np.sqrt(2.0), 0.5, 0.5])
    if N == 8:
        return np.array([0.0, 0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0.5])
    raise ValueError(f"no bundled benchmark rhs for N={N} (available: 2, 4, 8)")


def flat_overlap_rhs(N: int) -> PoissonProblem:
    """Benchmark rhs whose solution has equal overlap with every eigenvector.

    Choosing b_interior proportional to sum_j lambda_j u_j makes
    A^{-1} b proportional to sum_j u_j, so each eigenbranch carries the same
    weight in the post-selected output and the success probability tracks
    1/kappa^2 with an N-independent constant.
    """
    spectral = eigenpairs(N)
    b_interior = spectral.eigenvectors @ spectral.lambdas
    rhs = np.concatenate(([0.0], b_interior))
    return PoissonProblem(N, rhs)


def load_rhs(path) -> np.ndarray:
    """Read an rhs vector from a plain-text file: one real amplitude per
    line, 2^n lines, first line must be 0."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"rhs file {path} is empty")
    try:
        values = np.array([float(ln) for ln in lines])
    except ValueError as exc:
        raise ValueError(f"rhs file {path}: {exc}") from exc
    if len(values) < 2 or not is_power_of_two(len(values)):
        raise ValueError(
            f"rhs file {path} must contain a power-of-two number of lines >= 2, got {len(values)}"
        )
    if values[0] != 0.0:
        raise ValueError(f"rhs file {path}: first line must be 0")
    return values
