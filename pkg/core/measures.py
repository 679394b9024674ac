"""
Probability measures on the lattice circle.

A LineMeasure is a finite list of atoms plus a density table on either the
position or the momentum lattice (mass per cell is density times the spacing of
that lattice). Sets are GridSet cell masks; set translation is cyclic.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy import fft as sp_fft

from .errors import GridError, PositivityError
from .lattice import MOMENTUM, POSITION, GridSpec
from .logging_config import get_logger

logger = get_logger(__name__)

MASS_TOL = 1e-12
BOUNDARY_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridSet:
    """Subset of the cell indices {0..n-1}, stored as a boolean mask."""
    grid: GridSpec
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != (self.grid.n,):
            raise GridError(f"set mask has shape {mask.shape}, grid expects ({self.grid.n},)")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_indices(cls, grid: GridSpec, indices: Iterable[int]) -> "GridSet":
        mask = np.zeros(grid.n, dtype=bool)
        idx = np.asarray(list(indices), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= grid.n):
            raise GridError(f"cell index out of range [0, {grid.n})")
        mask[idx] = True
        return cls(grid, mask)

    @classmethod
    def full(cls, grid: GridSpec) -> "GridSet":
        return cls(grid, np.ones(grid.n, dtype=bool))

    @classmethod
    def empty(cls, grid: GridSpec) -> "GridSet":
        return cls(grid, np.zeros(grid.n, dtype=bool))

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self) -> int:
        return hash((self.grid, self.mask.tobytes()))

    def shifted(self, shift: int) -> "GridSet":
        """X + shift (cyclic)."""
        return GridSet(self.grid, np.roll(self.mask, int(shift)))

    def complement(self) -> "GridSet":
        return GridSet(self.grid, ~self.mask)

    def union(self, other: "GridSet") -> "GridSet":
        self.grid.require_same(other.grid)
        return GridSet(self.grid, self.mask | other.mask)

    def is_subset(self, other: "GridSet") -> bool:
        return not bool(np.any(self.mask & ~other.mask))


def half_line(grid: GridSpec, h: int) -> GridSet:
    """Cells {0, ..., h-1}: everything left of the h-th lattice point."""
    return GridSet(grid, np.arange(grid.n) < h)


def interval(grid: GridSpec, lo: float, hi: float, axis: str = POSITION) -> GridSet:
    """Cells whose coordinate on the given axis lies in [lo, hi)."""
    x = grid.coordinates(axis)
    return GridSet(grid, (x >= lo) & (x < hi))


@dataclass(frozen=True, eq=False)
class LineMeasure:
    """Probability measure: atoms (cell, weight) plus a nonnegative density table."""
    grid: GridSpec
    atoms: tuple
    density: np.ndarray
    axis: str = POSITION

    def __post_init__(self) -> None:
        if self.axis not in (POSITION, MOMENTUM):
            raise ValueError(f"axis must be '{POSITION}' or '{MOMENTUM}', got {self.axis!r}")
        density = np.array(self.density, dtype=np.float64)
        if density.shape != (self.grid.n,):
            raise GridError(f"density has shape {density.shape}, grid expects ({self.grid.n},)")
        if np.any(density < 0.0):
            raise PositivityError(f"negative density entry {density.min():.3g}")
        atoms = tuple((int(c), float(w)) for c, w in self.atoms)
        for cell, weight in atoms:
            if not 0 <= cell < self.grid.n:
                raise GridError(f"atom cell {cell} out of range [0, {self.grid.n})")
            if weight <= 0.0:
                raise PositivityError(f"atom weight must be positive, got {weight}")
        total = sum(w for _, w in atoms) + float(density.sum()) * self.spacing
        if abs(total - 1.0) > MASS_TOL:
            raise PositivityError(f"measure has total mass {total!r}, expected 1")
        density.setflags(write=False)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "atoms", atoms)

    @property
    def spacing(self) -> float:
        return self.grid.spacing(self.axis)

    @property
    def coordinates(self) -> np.ndarray:
        return self.grid.coordinates(self.axis)

    @cached_property
    def masses(self) -> np.ndarray:
        """Mass carried by each cell (atoms and density together)."""
        out = self.density * self.spacing
        for cell, weight in self.atoms:
            out[cell] += weight
        out.setflags(write=False)
        return out

    @property
    def is_atomic(self) -> bool:
        return not bool(np.any(self.density))

    def fingerprint(self) -> bytes:
        return self.masses.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LineMeasure):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.axis == other.axis
            and bool(np.array_equal(self.masses, other.masses))
        )

    def __hash__(self) -> int:
        return hash((self.grid, self.axis, self.fingerprint()))


def _snap(grid: GridSpec, x: float, axis: str) -> int:
    t = x / grid.spacing(axis) + grid.n // 2
    lower = math.floor(t)
    # Ties go to the lower index.
    cell = lower + 1 if t - lower > 0.5 else lower
    return int(cell)


def dirac(grid: GridSpec, x: float, axis: str = POSITION) -> LineMeasure:
    """δ_x snapped to the nearest cell (ties toward the lower index)."""
    coords = grid.coordinates(axis)
    if not coords[0] - 1e-12 <= x <= coords[-1] + 1e-12:
        raise GridError(f"x={x} lies outside the grid range [{coords[0]}, {coords[-1]}]")
    return LineMeasure(grid, ((_snap(grid, x, axis), 1.0),), np.zeros(grid.n), axis)


def from_atoms(grid: GridSpec, atoms: Iterable[tuple[int, float]], axis: str = POSITION) -> LineMeasure:
    return LineMeasure(grid, tuple(atoms), np.zeros(grid.n), axis)


def dirac_mixture(
    grid: GridSpec, points: Iterable[float], weights: Iterable[float], axis: str = POSITION
) -> LineMeasure:
    """Σ w_i δ_{x_i} with every point snapped to its cell."""
    atoms: dict[int, float] = {}
    for x, w in zip(points, weights):
        cell = dirac(grid, x, axis).atoms[0][0]
        atoms[cell] = atoms.get(cell, 0.0) + float(w)
    return from_atoms(grid, sorted((c, w) for c, w in atoms.items() if w > 0.0), axis)


def from_masses(grid: GridSpec, masses: np.ndarray, axis: str = POSITION) -> LineMeasure:
    """Density measure with the given per-cell masses, renormalized to 1."""
    masses = np.clip(np.asarray(masses, dtype=np.float64), 0.0, None)
    total = masses.sum()
    if total <= 0.0:
        raise PositivityError("mass table has no positive entry")
    return LineMeasure(grid, (), masses / (total * grid.spacing(axis)), axis)


def uniform(grid: GridSpec, axis: str = POSITION) -> LineMeasure:
    return from_masses(grid, np.ones(grid.n), axis)


def gaussian_measure(grid: GridSpec, variance: float, mean: float = 0.0, axis: str = POSITION) -> LineMeasure:
    """Sampled normal density with the given mean and variance."""
    if not variance > 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    x = grid.coordinates(axis)
    return from_masses(grid, np.exp(-(x - mean) ** 2 / (2.0 * variance)), axis)


def _window_masses(mu: LineMeasure, target: GridSet, shifts: np.ndarray) -> np.ndarray:
    # Row r sums masses over the cells of target - shifts[r]. Rows are sorted before
    # summing so equal multisets of masses give bit-identical sums under any rotation.
    n = mu.grid.n
    idx = (np.arange(n)[None, :] + np.asarray(shifts, dtype=int)[:, None]) % n
    rows = np.where(target.mask[idx], mu.masses[None, :], 0.0)
    return np.sort(rows, axis=1).sum(axis=1)


def translated_mass(mu: LineMeasure, target: GridSet, shift: int) -> float:
    """μ(X - shift) with cyclic set translation."""
    mu.grid.require_same(target.grid)
    return float(_window_masses(mu, target, np.array([shift]))[0])


def translated_mass_table(mu: LineMeasure, target: GridSet, shifts: np.ndarray) -> np.ndarray:
    """Vectorized translated_mass over many shifts."""
    mu.grid.require_same(target.grid)
    return _window_masses(mu, target, shifts)


def translate(mu: LineMeasure, shift: int) -> LineMeasure:
    """Push μ forward by `shift` cells: translate(μ, s)(X) = μ(X - s)."""
    n = mu.grid.n
    atoms = tuple(((c + shift) % n, w) for c, w in mu.atoms)
    return LineMeasure(mu.grid, atoms, np.roll(mu.density, int(shift)), mu.axis)


def _cyclic_convolution(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.real(sp_fft.ifft(sp_fft.fft(a) * sp_fft.fft(b)))


def convolve(mu1: LineMeasure, mu2: LineMeasure) -> LineMeasure:
    """Cyclic convolution μ1 ∗ μ2.

    Atom pairs stay atoms; every product involving a density goes to the density.
    Cell a and cell b combine into cell a + b - n/2, since coordinates add.
    """
    mu1.grid.require_same(mu2.grid)
    if mu1.axis != mu2.axis:
        raise GridError(f"cannot convolve a {mu1.axis} measure with a {mu2.axis} measure")
    grid = mu1.grid
    spacing = mu1.spacing
    n, half = grid.n, grid.n // 2
    atoms: dict[int, float] = {}
    for a, wa in mu1.atoms:
        for b, wb in mu2.atoms:
            cell = (a + b - half) % n
            atoms[cell] = atoms.get(cell, 0.0) + wa * wb

    d1 = mu1.density * spacing
    d2 = mu2.density * spacing
    cross = np.zeros(n)
    for a, wa in mu1.atoms:
        cross += wa * np.roll(d2, a - half)
    for b, wb in mu2.atoms:
        cross += wb * np.roll(d1, b - half)
    if np.any(d1) and np.any(d2):
        cross += np.clip(np.roll(_cyclic_convolution(d1, d2), -half), 0.0, None)

    # Floating drift from the FFT is pushed back into the density part.
    atom_mass = sum(atoms.values())
    cross_mass = cross.sum()
    if cross_mass > 0.0:
        cross *= (1.0 - atom_mass) / cross_mass
    return LineMeasure(grid, tuple(sorted(atoms.items())), cross / spacing, mu1.axis)


def boundary_mass(mu: LineMeasure) -> float:
    """Mass on the outer n/16 cells at each end of the lattice."""
    band = max(1, mu.grid.n // 16)
    m = mu.masses
    return float(m[:band].sum() + m[-band:].sum())


def is_tail_safe(mu: LineMeasure, tol: float = BOUNDARY_MASS_TOL) -> bool:
    return boundary_mass(mu) <= tol


def _warn_if_unsafe(mu: LineMeasure) -> None:
    mass = boundary_mass(mu)
    if mass > BOUNDARY_MASS_TOL:
        logger.warning(f"boundary cells carry mass {mass:.3g}; moments on the torus are unreliable")


def mean(mu: LineMeasure) -> float:
    """First moment with linear (non-periodic) cell coordinates."""
    _warn_if_unsafe(mu)
    return float(np.dot(mu.coordinates, mu.masses))


def variance(mu: LineMeasure) -> float:
    """Second central moment with linear cell coordinates."""
    _warn_if_unsafe(mu)
    x = mu.coordinates
    m = mu.masses
    centre = float(np.dot(x, m))
    return float(np.dot((x - centre) ** 2, m))
