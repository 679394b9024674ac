"""
Covariant phase space observables on the n×n lattice phase space.

Cell (c, d) stands for the phase-space point (x_c, p_d) and is reached from the
origin cell (n/2, n/2) by the displacement W(c - n/2, d - n/2). The generated
observable G_T assigns (1/n) W T W† to each cell, which sums to the identity
exactly on the torus.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional

import numpy as np
from scipy import linalg

from .errors import GridError, PositivityError
from .lattice import MOMENTUM, GridSpec
from .logging_config import get_logger
from .measures import GridSet, LineMeasure, from_masses
from .operators import DensityOperator, Effect, weyl

logger = get_logger(__name__)

NORMALIZATION_TOL = 1e-10
NEGATIVITY_CLAMP = 1e-12
GRAM_RANK_THRESHOLD = 1e-8
MAX_TABLE_POINTS = 32


@dataclass(frozen=True, eq=False)
class PhaseRegion:
    """Set of phase-space cells (q-index, p-index)."""
    grid: GridSpec
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != (self.grid.n, self.grid.n):
            raise GridError(f"region mask has shape {mask.shape}, grid expects ({self.grid.n}, {self.grid.n})")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_cells(cls, grid: GridSpec, cells) -> "PhaseRegion":
        mask = np.zeros((grid.n, grid.n), dtype=bool)
        for c, d in cells:
            mask[int(c) % grid.n, int(d) % grid.n] = True
        return cls(grid, mask)

    @classmethod
    def full(cls, grid: GridSpec) -> "PhaseRegion":
        return cls(grid, np.ones((grid.n, grid.n), dtype=bool))

    @classmethod
    def empty(cls, grid: GridSpec) -> "PhaseRegion":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=bool))

    @classmethod
    def product(cls, grid: GridSpec, xs: Optional[GridSet] = None, ys: Optional[GridSet] = None) -> "PhaseRegion":
        """X × Y; a missing factor means the whole line."""
        qx = np.ones(grid.n, dtype=bool) if xs is None else xs.mask
        py = np.ones(grid.n, dtype=bool) if ys is None else ys.mask
        return cls(grid, np.outer(qx, py))

    @property
    def cells(self) -> np.ndarray:
        """Member cells in row-major order, shape (m, 2)."""
        return np.argwhere(self.mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def shifted(self, a: int, b: int) -> "PhaseRegion":
        """Z + (a, b)."""
        return PhaseRegion(self.grid, np.roll(self.mask, (int(a), int(b)), axis=(0, 1)))

    @property
    def is_proper(self) -> bool:
        return 0 < len(self) < self.grid.n ** 2


def displacement_for_cell(grid: GridSpec, c: int, d: int):
    """The Weyl operator carrying the origin cell to cell (c, d)."""
    half = grid.n // 2
    return weyl(grid, int(c) - half, int(d) - half)


@dataclass(frozen=True, eq=False)
class JointObservable:
    """Effect family over the n×n phase space.

    Either generated by a state (cell effects computed on demand) or given as an
    explicit (n, n, n, n) table of cell effects.
    """
    grid: GridSpec
    state: Optional[DensityOperator] = None
    table: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if (self.state is None) == (self.table is None):
            raise ValueError("JointObservable needs exactly one of state or table")
        if self.state is not None:
            self.grid.require_same(self.state.grid)
            return
        n = self.grid.n
        if n > MAX_TABLE_POINTS:
            raise MemoryError(f"explicit effect tables are limited to n <= {MAX_TABLE_POINTS}, got n={n}")
        table = np.array(self.table, dtype=np.complex128)
        if table.shape != (n, n, n, n):
            raise PositivityError(f"effect table has shape {table.shape}, expected {(n, n, n, n)}")
        defect = float(np.max(np.abs(table.sum(axis=(0, 1)) - np.eye(n))))
        if defect > NORMALIZATION_TOL:
            raise PositivityError(f"cell effects sum to the identity only within {defect:.3g}")
        hermitian = float(np.max(np.abs(table - np.conj(np.swapaxes(table, 2, 3)))))
        if hermitian > NORMALIZATION_TOL:
            raise PositivityError(f"cell effects are not Hermitian (defect {hermitian:.3g})")
        lowest = float(np.min(np.linalg.eigvalsh(table)))
        if lowest < -NORMALIZATION_TOL:
            raise PositivityError(f"a cell effect has eigenvalue {lowest:.3g}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def is_generated(self) -> bool:
        return self.state is not None

    def cell_matrix(self, c: int, d: int) -> np.ndarray:
        if self.table is not None:
            return self.table[c, d]
        w = displacement_for_cell(self.grid, c, d)
        return w.conjugate(self.state.matrix) / self.grid.n

    def cells(self) -> Iterator[tuple[int, int, np.ndarray]]:
        """All (c, d, effect) in row-major order."""
        n = self.grid.n
        for c in range(n):
            for d in range(n):
                yield c, d, self.cell_matrix(c, d)

    @cached_property
    def full_table(self) -> np.ndarray:
        if self.table is not None:
            return self.table
        n = self.grid.n
        if n > MAX_TABLE_POINTS:
            raise MemoryError(f"explicit effect tables are limited to n <= {MAX_TABLE_POINTS}, got n={n}")
        out = np.empty((n, n, n, n), dtype=np.complex128)
        for c, d, m in self.cells():
            out[c, d] = m
        out.setflags(write=False)
        return out


def covariant_observable(state: DensityOperator) -> JointObservable:
    """G_T with cell effects (1/n) W(j,k) T W(j,k)†."""
    return JointObservable(state.grid, state=state)


def effect_of_region(observable: JointObservable, region: PhaseRegion) -> Effect:
    """G(Z) as the fixed-order sum of its cell effects."""
    observable.grid.require_same(region.grid)
    n = observable.grid.n
    total = np.zeros((n, n), dtype=np.complex128)
    for c, d in region.cells:
        total += observable.cell_matrix(c, d)
    return Effect.from_matrix(observable.grid, total)


def margin_measures(state: DensityOperator) -> tuple[LineMeasure, LineMeasure]:
    """(ρ, ν) with e(q) = Σ λ_i |φ_i(-q)|² and f(p) = Σ λ_i |φ̂_i(-p)|²."""
    n = state.grid.n
    reflection = (-np.arange(n)) % n
    rho = from_masses(state.grid, state.position_distribution()[reflection])
    nu = from_masses(state.grid, state.momentum_distribution()[reflection], MOMENTUM)
    return rho, nu


def margin_observables(observable: JointObservable) -> tuple[np.ndarray, np.ndarray]:
    """Per-line sums: Q[c] = Σ_d G(c, d) and P[d] = Σ_c G(c, d)."""
    table = observable.full_table
    return table.sum(axis=1), table.sum(axis=0)


def _conjugate_stack(w, stack: np.ndarray, adjoint: bool) -> np.ndarray:
    # W A W† (or W† A W) for every matrix in the trailing two axes.
    v = w.boost
    if adjoint:
        return np.roll(stack, (-w.j, -w.j), axis=(-2, -1)) * np.outer(v.conj(), v)
    return np.roll(stack * np.outer(v, v.conj()), (w.j, w.j), axis=(-2, -1))


def covariance_defect(observable: JointObservable, shifts: Optional[list[tuple[int, int]]] = None) -> float:
    """max over shifts (a, b) and cells z of ‖W(a,b) G(z) W(a,b)† - G(z + (a,b))‖_max."""
    n = observable.grid.n
    table = observable.full_table
    if shifts is None:
        shifts = [(a, b) for a in range(n) for b in range(n)]
    worst = 0.0
    for a, b in shifts:
        moved = _conjugate_stack(weyl(observable.grid, a, b), table, adjoint=False)
        target = np.roll(table, (-a, -b), axis=(0, 1))
        worst = max(worst, float(np.max(np.abs(moved - target))))
    return worst


def covariant_average(observable: JointObservable) -> JointObservable:
    """Uniform group average M^av(z) = (1/n²) Σ_{a,b} W(a,b)† M(z + (a,b)) W(a,b).

    The result is a covariant phase space observable; covariant inputs are fixed.
    """
    grid = observable.grid
    n = grid.n
    table = observable.full_table
    defect = float(np.max(np.abs(table.sum(axis=(0, 1)) - np.eye(n))))
    if defect > NORMALIZATION_TOL:
        raise PositivityError(f"cannot average a non-normalized observable (defect {defect:.3g})")
    acc = np.zeros_like(table)
    for a in range(n):
        for b in range(n):
            rolled = np.roll(table, (-a, -b), axis=(0, 1))
            acc += _conjugate_stack(weyl(grid, a, b), rolled, adjoint=True)
    acc /= n * n
    logger.debug(f"Averaged {n * n} translates of a {n}x{n} effect table")
    return JointObservable(grid, table=acc)


@dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    rank: int
    dimension: int


def is_informationally_complete(state: DensityOperator) -> CompletenessReport:
    """Rank of the real Gram matrix of the n² conjugates W T W†."""
    grid = state.grid
    n = grid.n
    vectors = np.empty((n * n, 2 * n * n))
    for idx, (c, d) in enumerate(np.ndindex(n, n)):
        m = displacement_for_cell(grid, c, d).conjugate(state.matrix)
        vectors[idx, : n * n] = m.real.ravel()
        vectors[idx, n * n:] = m.imag.ravel()
    gram = vectors @ vectors.T
    values = np.abs(linalg.eigvalsh(gram))
    rank = int(np.sum(values > GRAM_RANK_THRESHOLD * values.max()))
    logger.debug(f"Weyl-conjugate Gram rank {rank} of {n * n}")
    return CompletenessReport(rank == n * n, rank, n * n)


def _generated_outcome_table(generator: DensityOperator, state: DensityOperator) -> np.ndarray:
    # tr[S W T W†] for all momentum shifts at once: after undoing the translation,
    # the boost only multiplies diagonal m - m' by exp(2πik(m - m')/n), so the
    # diagonal sums of S_jᵀ ⊙ T give every k through one inverse FFT.
    n = generator.grid.n
    half = n // 2
    t = generator.matrix
    s = state.matrix
    lag = ((np.arange(n)[:, None] - np.arange(n)[None, :]) % n).ravel()
    ks = (np.arange(n) - half) % n
    table = np.empty((n, n))
    for c in range(n):
        j = c - half
        h = (np.roll(s, (-j, -j), axis=(0, 1)).T * t).ravel()
        diagonals = np.bincount(lag, weights=h.real, minlength=n) + 1j * np.bincount(lag, weights=h.imag, minlength=n)
        table[c] = np.real(np.fft.ifft(diagonals))[ks]
    return table


def outcome_distribution(observable: JointObservable, state: DensityOperator) -> np.ndarray:
    """n×n table p(c, d) = tr[S G(c, d)]; tiny negative entries are clamped.

    Raises:
        PositivityError: If an entry is below -1e-12 or the table does not sum to 1.
    """
    observable.grid.require_same(state.grid)
    n = observable.grid.n
    if observable.is_generated:
        table = _generated_outcome_table(observable.state, state)
    else:
        s_transposed = state.matrix.T
        table = np.empty((n, n))
        for c, d, m in observable.cells():
            table[c, d] = float(np.real(np.sum(s_transposed * m)))
    lowest = float(table.min())
    if lowest < -NEGATIVITY_CLAMP:
        raise PositivityError(f"outcome probability {lowest:.3g} is negative")
    if lowest < 0.0:
        logger.debug(f"Clamping negative outcome probabilities down to {lowest:.3g}")
        table = np.clip(table, 0.0, None)
    total = float(table.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise PositivityError(f"outcome table sums to {total!r}")
    return table / total


def sample_outcomes(observable: JointObservable, state: DensityOperator, count: int, seed: int) -> np.ndarray:
    """i.i.d. outcome cells drawn by inverse CDF over the row-major flattened table.

    Returns:
        Integer array of shape (count, 2) holding (q-index, p-index) pairs.
    """
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    n = observable.grid.n
    table = outcome_distribution(observable, state)
    cdf = np.cumsum(table.ravel())
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    flat = np.searchsorted(cdf, rng.random(count), side="right")
    flat = np.minimum(flat, n * n - 1)
    return np.stack((flat // n, flat % n), axis=1)


def outcome_table_duality(first: DensityOperator, second: DensityOperator) -> float:
    """max |p^{G_T}_S(z) - p^{G_S}_T(-z)| over cells."""
    n = first.grid.n
    forward = outcome_distribution(covariant_observable(first), second)
    backward = outcome_distribution(covariant_observable(second), first)
    reflection = (-np.arange(n)) % n
    return float(np.max(np.abs(forward - backward[np.ix_(reflection, reflection)])))


def observable_distance(first: JointObservable, second: JointObservable) -> float:
    """max over cells of ‖G1(cell) - G2(cell)‖."""
    first.grid.require_same(second.grid)
    worst = 0.0
    for c, d, m in first.cells():
        diff = m - second.cell_matrix(c, d)
        worst = max(worst, float(np.max(np.abs(linalg.eigvalsh(diff)))))
    return worst


def random_effect_table(grid: GridSpec, rng: np.random.Generator) -> JointObservable:
    """Random normalized table S^{-1/2} A_z S^{-1/2} with A_z = X_z X_z†, S = Σ A_z."""
    n = grid.n
    if n > MAX_TABLE_POINTS:
        raise MemoryError(f"explicit effect tables are limited to n <= {MAX_TABLE_POINTS}, got n={n}")
    x = rng.standard_normal((n, n, n, 2)) + 1j * rng.standard_normal((n, n, n, 2))
    blocks = x @ np.conj(np.swapaxes(x, -1, -2))
    total = blocks.sum(axis=(0, 1))
    evals, evecs = linalg.eigh(total)
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
    table = inv_sqrt @ blocks @ inv_sqrt
    table = 0.5 * (table + np.conj(np.swapaxes(table, -1, -2)))
    return JointObservable(grid, table=table)
