"""
Periodic position/momentum lattice.

L²(R) is modelled on an even n-point torus with centered coordinates
x_j = (j - n/2) dx and p_k = (k - n/2) dp, dp = 2π / (n dx). Amplitudes carry a
factor √dx so that the Euclidean norm of a vector equals the L² norm of the
sampled wave function.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft
from scipy import stats

from .errors import GridError, GridMismatchError, TailMassError
from .logging_config import get_logger

logger = get_logger(__name__)

MIN_POINTS = 4
DEFAULT_TAIL_TOLERANCE = 1e-12

POSITION = "position"
MOMENTUM = "momentum"


@dataclass(frozen=True)
class GridSpec:
    """N-point periodic position lattice together with its dual momentum lattice."""
    n: int
    dx: float

    @property
    def dp(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    def spacing(self, axis: str = POSITION) -> float:
        return self.dx if axis == POSITION else self.dp

    def coordinates(self, axis: str = POSITION) -> np.ndarray:
        return self.positions if axis == POSITION else self.momenta

    @property
    def center(self) -> int:
        """Index of the x = 0 (and p = 0) cell."""
        return self.n // 2

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def momenta(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dp

    @property
    def is_symmetric(self) -> bool:
        return math.isclose(self.dx, self.dp, rel_tol=1e-12)

    def require_same(self, other: "GridSpec") -> None:
        """Raise GridMismatchError unless `other` is the same lattice."""
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


def make_grid(n: int, dx: float) -> GridSpec:
    """Build a validated grid.

    Args:
        n: Even number of lattice points, at least 4.
        dx: Positive position spacing.

    Returns:
        GridSpec with dp = 2π/(n dx).

    Raises:
        GridError: If n is odd, too small, or dx is not a positive finite number.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise GridError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < MIN_POINTS:
        raise GridError(f"n must be at least {MIN_POINTS}, got {n}")
    if n % 2:
        raise GridError(f"n must be even, got {n}")
    dx = float(dx)
    if not math.isfinite(dx) or dx <= 0.0:
        raise GridError(f"dx must be positive, got {dx}")
    return GridSpec(n, dx)


def symmetric_grid(n: int) -> GridSpec:
    """Grid with dx = dp = √(2π/n); positions and momenta share one point set."""
    return make_grid(n, math.sqrt(2.0 * math.pi / n))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Vector on the lattice; component j is ψ(x_j)·√dx."""
    grid: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.n,):
            raise GridMismatchError(
                f"amplitude table has shape {amps.shape}, grid expects ({self.grid.n},)"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """⟨self, other⟩, antilinear in the first slot."""
        self.grid.require_same(other.grid)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.grid, self.amplitudes / norm)

    def probabilities(self) -> np.ndarray:
        """|ψ_j|², the mass carried by each cell."""
        return np.abs(self.amplitudes) ** 2

    def wavefunction(self) -> np.ndarray:
        """Sampled ψ(x_j) without the √dx factor."""
        return self.amplitudes / math.sqrt(self.grid.dx)


def _parity(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


def _apply_fourier(grid: GridSpec, table: np.ndarray, inverse: bool = False) -> np.ndarray:
    # Centered DFT: e^{-iπn/2} s·fft(s·ψ) with s_j = (-1)^j; the global factor is ±1.
    s = _parity(grid.n)
    shape = (grid.n,) + (1,) * (table.ndim - 1)
    s = s.reshape(shape)
    sign = -1.0 if (grid.n // 2) % 2 else 1.0
    if inverse:
        out = sp_fft.ifft(s * table, axis=0, norm="ortho")
    else:
        out = sp_fft.fft(s * table, axis=0, norm="ortho")
    return sign * s * out


def fourier_transform(psi: StateVector) -> StateVector:
    """Unitary centered DFT, the lattice Fourier-Plancherel operator.

    (Fψ)(p_k) = (1/√2π) Σ_j ψ(x_j) e^{-i p_k x_j} dx, returned on the same grid
    with momentum points read as positions.
    """
    return StateVector(psi.grid, _apply_fourier(psi.grid, psi.amplitudes))


def inverse_fourier_transform(phi: StateVector) -> StateVector:
    return StateVector(phi.grid, _apply_fourier(phi.grid, phi.amplitudes, inverse=True))


@lru_cache(maxsize=16)
def fourier_matrix(grid: GridSpec) -> np.ndarray:
    """Dense matrix of the centered DFT (read-only, cached per grid)."""
    matrix = _apply_fourier(grid, np.eye(grid.n, dtype=np.complex128))
    matrix.setflags(write=False)
    return matrix


def reflect(psi: StateVector) -> StateVector:
    """Parity x ↦ -x on the centered lattice; equals F²."""
    return StateVector(psi.grid, np.roll(psi.amplitudes[::-1], 1))


def gaussian_tail_mass(grid: GridSpec, a: float, c: float = 0.0) -> float:
    """Mass of e^{-2a(x-c)²} (normalized on R) outside the lattice window."""
    sigma = 1.0 / (2.0 * math.sqrt(a))
    x = grid.positions
    lo = x[0] - 0.5 * grid.dx
    hi = x[-1] + 0.5 * grid.dx
    return float(stats.norm.cdf(lo, loc=c, scale=sigma) + stats.norm.sf(hi, loc=c, scale=sigma))


def gaussian_state(
    grid: GridSpec,
    a: float,
    b: float = 0.0,
    b_lin: float = 0.0,
    c: float = 0.0,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> StateVector:
    """Sampled (2a/π)^{1/4} e^{i b_lin x} e^{-(a+ib)(x-c)²}, renormalized.

    Raises:
        ValueError: If a <= 0.
        TailMassError: If more than `tail_tolerance` of |ψ|² falls outside the grid.
    """
    if not a > 0.0:
        raise ValueError(f"Gaussian width parameter a must be positive, got {a}")
    tail = gaussian_tail_mass(grid, a, c)
    if tail > tail_tolerance:
        raise TailMassError(
            f"Gaussian (a={a}, c={c}) leaks {tail:.3g} of its mass outside the grid "
            f"(n={grid.n}, dx={grid.dx})",
            tail,
        )
    x = grid.positions
    values = (2.0 * a / math.pi) ** 0.25 * np.exp(1j * b_lin * x) * np.exp(-(a + 1j * b) * (x - c) ** 2)
    return StateVector(grid, values * math.sqrt(grid.dx)).normalized()


def gaussian_transform(grid: GridSpec, a: float, b: float = 0.0, b_lin: float = 0.0, c: float = 0.0) -> np.ndarray:
    """Closed-form Fourier transform of the Gaussian family as lattice amplitudes.

    Returns φ̂(p_k)·√dp, where for the centered Gaussian
    φ̂(p) = (a / 2π(a²+b²))^{1/4} exp(-(a - ib) p² / 4(a²+b²) - (i/2) arctan(b/a)),
    shifted by b_lin in momentum and carrying the phase e^{-i(p-b_lin)c}.
    """
    p = grid.momenta - b_lin
    s = a * a + b * b
    modulus = (a / (2.0 * math.pi * s)) ** 0.25 * np.exp(-a * p ** 2 / (4.0 * s))
    phase = np.exp(1j * b * p ** 2 / (4.0 * s) - 0.5j * math.atan2(b, a) - 1j * p * c)
    return modulus * phase * math.sqrt(grid.dp)
