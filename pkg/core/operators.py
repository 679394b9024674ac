"""
Hermitian operators, effects, density operators and the lattice Weyl system.

Displacements are kept as (j, k, phase) triples and act on vectors and
matrices through rolls and pointwise phases; dense matrices are only built
when a caller asks for one.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Union

import numpy as np
from scipy import linalg

from .errors import GridMismatchError, PositivityError
from .lattice import MOMENTUM, POSITION, GridSpec, StateVector, fourier_matrix
from .logging_config import get_logger

logger = get_logger(__name__)

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10

DENSE = "dense"


def _check_square(grid: GridSpec, matrix: np.ndarray) -> None:
    if matrix.shape != (grid.n, grid.n):
        raise GridMismatchError(f"matrix has shape {matrix.shape}, grid expects ({grid.n}, {grid.n})")


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian n×n operator on the lattice."""
    grid: GridSpec
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        _check_square(self.grid, matrix)
        defect = hermiticity_defect(matrix)
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if defect > HERMITIAN_TOL * scale:
            raise PositivityError(f"operator is not Hermitian: max|A - A†| = {defect:.3g}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class Effect:
    """Positive operator bounded by the identity.

    Effects of position/momentum observables are stored as their diagonal in
    the position or momentum basis; everything else is dense.
    """
    grid: GridSpec
    basis: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.basis == DENSE:
            values = HermitianOperator(self.grid, self.values).matrix
            spectrum = linalg.eigvalsh(values)
        elif self.basis in (POSITION, MOMENTUM):
            values = np.array(self.values, dtype=np.float64)
            if values.shape != (self.grid.n,):
                raise GridMismatchError(f"diagonal has shape {values.shape}, grid expects ({self.grid.n},)")
            values.setflags(write=False)
            spectrum = values
        else:
            raise ValueError(f"unknown effect basis {self.basis!r}")
        lo, hi = float(np.min(spectrum)), float(np.max(spectrum))
        if lo < -POSITIVITY_TOL or hi > 1.0 + POSITIVITY_TOL:
            raise PositivityError(f"effect spectrum [{lo:.3g}, {hi:.3g}] is outside [0, 1]")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_matrix(cls, grid: GridSpec, matrix: np.ndarray) -> "Effect":
        return cls(grid, DENSE, matrix)

    @property
    def is_diagonal(self) -> bool:
        return self.basis != DENSE

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.basis == POSITION:
            out = np.diag(self.values).astype(np.complex128)
        elif self.basis == MOMENTUM:
            f = fourier_matrix(self.grid)
            out = f.conj().T @ (self.values[:, None] * f)
        else:
            return self.values
        out.setflags(write=False)
        return out

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.is_diagonal:
            return np.sort(self.values)
        return linalg.eigvalsh(self.values)

    def expectation(self, state: "DensityOperator") -> float:
        """tr[T E]."""
        self.grid.require_same(state.grid)
        if self.basis == POSITION:
            return float(np.dot(state.position_distribution(), self.values))
        if self.basis == MOMENTUM:
            return float(np.dot(state.momentum_distribution(), self.values))
        return float(np.real(np.trace(state.matrix @ self.values)))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """State T = Σ λ_i |φ_i⟩⟨φ_i| kept in spectral form.

    `vectors` holds the orthonormal φ_i as columns.
    """
    grid: GridSpec
    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        vectors = np.array(self.vectors, dtype=np.complex128)
        if vectors.ndim != 2 or vectors.shape[0] != self.grid.n or vectors.shape[1] != weights.size:
            raise GridMismatchError(
                f"spectral data shapes {vectors.shape} / {weights.shape} do not fit n={self.grid.n}"
            )
        if np.any(weights < 0.0):
            raise PositivityError(f"negative weight {weights.min():.3g} in density operator")
        total = float(weights.sum())
        if abs(total - 1.0) > TRACE_TOL:
            raise PositivityError(f"density operator weights sum to {total!r}, expected 1")
        gram = vectors.conj().T @ vectors
        defect = float(np.max(np.abs(gram - np.eye(weights.size)))) if weights.size else 0.0
        if defect > ORTHONORMAL_TOL:
            raise PositivityError(f"spectral vectors are not orthonormal (defect {defect:.3g})")
        weights.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def pure(cls, psi: StateVector) -> "DensityOperator":
        psi = psi.normalized()
        return cls(psi.grid, np.ones(1), psi.amplitudes[:, None])

    @classmethod
    def maximally_mixed(cls, grid: GridSpec) -> "DensityOperator":
        return cls(grid, np.full(grid.n, 1.0 / grid.n), np.eye(grid.n))

    @classmethod
    def from_matrix(cls, grid: GridSpec, matrix: np.ndarray, cutoff: float = 1e-14) -> "DensityOperator":
        """Spectral decomposition of a dense positive trace-one matrix.

        Eigenvalues below `cutoff` are dropped; larger negative ones are an error.
        """
        matrix = HermitianOperator(grid, matrix).matrix
        evals, evecs = linalg.eigh(matrix)
        if evals.min() < -POSITIVITY_TOL:
            raise PositivityError(f"matrix has negative eigenvalue {evals.min():.3g}")
        keep = evals > cutoff
        weights = evals[keep]
        weights = weights / weights.sum()
        return cls(grid, weights, evecs[:, keep])

    @classmethod
    def mixture(cls, states: Iterable[StateVector], weights: Iterable[float]) -> "DensityOperator":
        """Σ w_i |ψ_i⟩⟨ψ_i| for arbitrary (not necessarily orthogonal) ψ_i."""
        states = list(states)
        weights = np.asarray(list(weights), dtype=np.float64)
        if not states:
            raise ValueError("mixture needs at least one state")
        if np.any(weights < 0.0) or weights.sum() <= 0.0:
            raise PositivityError("mixture weights must be nonnegative with positive sum")
        grid = states[0].grid
        columns = np.stack([s.normalized().amplitudes for s in states], axis=1)
        for s in states[1:]:
            grid.require_same(s.grid)
        matrix = (columns * (weights / weights.sum())) @ columns.conj().T
        return cls.from_matrix(grid, matrix)

    @cached_property
    def matrix(self) -> np.ndarray:
        out = (self.vectors * self.weights) @ self.vectors.conj().T
        out.setflags(write=False)
        return out

    @property
    def rank(self) -> int:
        return int(self.weights.size)

    def purity(self) -> float:
        """tr(T²) = Σ λ_i²."""
        return float(np.sum(self.weights ** 2))

    def states(self) -> list[StateVector]:
        return [StateVector(self.grid, self.vectors[:, i]) for i in range(self.rank)]

    def position_distribution(self) -> np.ndarray:
        """Diagonal of T in the position basis (cell masses)."""
        return np.abs(self.vectors) ** 2 @ self.weights

    def momentum_distribution(self) -> np.ndarray:
        """Diagonal of T in the momentum basis."""
        transformed = fourier_matrix(self.grid) @ self.vectors
        return np.abs(transformed) ** 2 @ self.weights


@dataclass(frozen=True)
class Displacement:
    """Unitary phase·U(j)·V(k) acting on the lattice.

    U(j) shifts cyclically by j cells, V(k) multiplies by e^{i k dp x_m}.
    """
    grid: GridSpec
    j: int
    k: int
    phase: complex = 1.0

    @property
    def boost(self) -> np.ndarray:
        m = np.arange(self.grid.n) - self.grid.n // 2
        return np.exp(2j * math.pi * self.k * m / self.grid.n)

    def apply(self, table: np.ndarray) -> np.ndarray:
        """Act on a vector or on the columns of a matrix."""
        table = np.asarray(table)
        v = self.boost.reshape((self.grid.n,) + (1,) * (table.ndim - 1))
        return self.phase * np.roll(v * table, self.j, axis=0)

    def apply_adjoint(self, table: np.ndarray) -> np.ndarray:
        table = np.asarray(table)
        v = self.boost.reshape((self.grid.n,) + (1,) * (table.ndim - 1))
        return np.conj(self.phase) * v.conj() * np.roll(table, -self.j, axis=0)

    def __call__(self, psi: StateVector) -> StateVector:
        self.grid.require_same(psi.grid)
        return StateVector(self.grid, self.apply(psi.amplitudes))

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.grid.n, dtype=np.complex128))

    def conjugate(self, matrix: np.ndarray) -> np.ndarray:
        """D A D†; the scalar phase cancels."""
        v = self.boost
        return np.roll(matrix * np.outer(v, v.conj()), (self.j, self.j), axis=(0, 1))

    def conjugate_adjoint(self, matrix: np.ndarray) -> np.ndarray:
        """D† A D."""
        v = self.boost
        return np.roll(matrix, (-self.j, -self.j), axis=(0, 1)) * np.outer(v.conj(), v)


def translation(grid: GridSpec, j: int) -> Displacement:
    """U(j): (Uψ)(x_m) = ψ(x_{m-j mod n})."""
    return Displacement(grid, int(j) % grid.n, 0)


def modulation(grid: GridSpec, k: int) -> Displacement:
    """V(k): pointwise multiplication by e^{i k dp x_m}."""
    return Displacement(grid, 0, int(k) % grid.n)


def weyl(grid: GridSpec, j: int, k: int) -> Displacement:
    """W(j, k) = τ^{jk} U(j) V(k) with τ = e^{iπ/n}, so τ^{jk} = e^{i q_j p_k / 2}."""
    j, k = int(j), int(k)
    phase = complex(np.exp(1j * math.pi * j * k / grid.n))
    # Translation and boost are periodic in their index; only the phase sees the representative.
    return Displacement(grid, j % grid.n, k % grid.n, phase)


def operator_norm(operator: Union[HermitianOperator, Effect, np.ndarray], grid: Optional[GridSpec] = None) -> float:
    """Largest absolute eigenvalue of a Hermitian operator.

    Raises:
        PositivityError: If a raw matrix is not Hermitian.
    """
    if isinstance(operator, Effect):
        return float(np.max(np.abs(operator.eigenvalues)))
    if isinstance(operator, HermitianOperator):
        return float(np.max(np.abs(operator.eigenvalues)))
    matrix = np.asarray(operator, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise GridMismatchError(f"operator_norm needs a square matrix, got shape {matrix.shape}")
    if grid is None:
        n = matrix.shape[0]
        grid = GridSpec(n, 1.0)
    return float(np.max(np.abs(HermitianOperator(grid, matrix).eigenvalues)))


def conjugate_density(state: DensityOperator, j: int, k: int) -> DensityOperator:
    """W(j,k) T W(j,k)†, obtained by displacing every spectral vector."""
    w = weyl(state.grid, j, k)
    return DensityOperator(state.grid, state.weights, w.apply(state.vectors))


def random_density(grid: GridSpec, rng: np.random.Generator, rank: Optional[int] = None) -> DensityOperator:
    """Random state G G† / tr(G G†) from a complex Ginibre matrix with `rank` columns."""
    rank = grid.n if rank is None else rank
    g = rng.standard_normal((grid.n, rank)) + 1j * rng.standard_normal((grid.n, rank))
    matrix = g @ g.conj().T
    return DensityOperator.from_matrix(grid, matrix / np.real(np.trace(matrix)))
