"""
Quantitative checks on position/momentum joint measurements.

Uncertainty products, Gaussian joint-state construction, the Pauli pair,
Fourier self-duality, localization norms and the Dirac-mixture projection.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import GridError, NotJointlyMeasurable, TailMassError
from .lattice import (
    DEFAULT_TAIL_TOLERANCE,
    GridSpec,
    fourier_transform,
    gaussian_state,
)
from .logging_config import get_logger
from .measures import (
    BOUNDARY_MASS_TOL,
    GridSet,
    LineMeasure,
    boundary_mass,
    convolve,
    dirac_mixture,
    from_masses,
    variance,
)
from .operators import MOMENTUM, POSITION, DensityOperator, Effect, operator_norm
from .phasespace import JointObservable, PhaseRegion, effect_of_region, margin_measures
from .povm import distinguish_measures, momentum_effect, position_effect

logger = get_logger(__name__)

MIN_UNCERTAINTY = 0.25
PURE_PRODUCT_TOL = 1e-6
PRODUCT_SLACK = 1e-9
LOCALIZATION_MARGIN = 1e-9


@dataclass(frozen=True)
class UncertaintyReport:
    """Var(p^{E_ρ}_S), Var(p^{F_ν}_S) and their product, with the parts they add up from."""
    var_q_total: float
    var_p_total: float
    product: float
    var_q_state: float
    var_q_margin: float
    var_p_state: float
    var_p_margin: float


def _require_tail_safe(label: str, mu: LineMeasure, tol: float) -> None:
    mass = boundary_mass(mu)
    if mass > tol:
        raise TailMassError(f"{label} puts mass {mass:.3g} on the boundary cells", mass)


def uncertainty_product(
    generator: DensityOperator, state: DensityOperator, tail_tolerance: float = BOUNDARY_MASS_TOL
) -> UncertaintyReport:
    """Variances of the margin statistics of G_T in the state S.

    p^{E_ρ}_S is the position distribution of S convolved with ρ, and likewise in
    momentum, so each total variance is the sum of a state part and a margin part.

    Raises:
        TailMassError: If any of the four distributions reaches the grid boundary.
    """
    generator.grid.require_same(state.grid)
    grid = state.grid
    rho, nu = margin_measures(generator)
    s_q = from_masses(grid, state.position_distribution())
    s_p = from_masses(grid, state.momentum_distribution(), MOMENTUM)
    for label, mu in (("rho", rho), ("nu", nu), ("state position law", s_q), ("state momentum law", s_p)):
        _require_tail_safe(label, mu, tail_tolerance)

    var_q_total = variance(convolve(s_q, rho))
    var_p_total = variance(convolve(s_p, nu))
    return UncertaintyReport(
        var_q_total=var_q_total,
        var_p_total=var_p_total,
        product=var_q_total * var_p_total,
        var_q_state=variance(s_q),
        var_q_margin=variance(rho),
        var_p_state=variance(s_p),
        var_p_margin=variance(nu),
    )


def _noise_weights(noise_variance: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice offsets and weights of a centered law with exactly the requested variance."""
    if noise_variance <= 1e-15:
        return np.zeros(1, dtype=int), np.ones(1)
    ratio = noise_variance / spacing ** 2
    if ratio < 1.0:
        # Three-point law: variance ratio·spacing² exactly.
        return np.array([-1, 0, 1]), np.array([ratio / 2.0, 1.0 - ratio, ratio / 2.0])
    reach = int(math.ceil(8.0 * math.sqrt(ratio)))
    offsets = np.arange(-reach, reach + 1)
    weights = np.exp(-(offsets * spacing) ** 2 / (2.0 * noise_variance))
    return offsets, weights / weights.sum()


def gaussian_joint_state(
    var_q: float, var_p: float, grid: GridSpec, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
) -> DensityOperator:
    """A state T whose margins ρ, ν have variances (var_q, var_p).

    At Var(ρ)Var(ν) = 1/4 this is the pure Gaussian with a = 1/(4 var_q). Above the
    bound a Gaussian core with a = √(var_p / 4var_q) is smeared by classical
    position and momentum noise that supplies the remaining variance.

    Raises:
        NotJointlyMeasurable: If var_q·var_p < 1/4.
    """
    if not (var_q > 0.0 and var_p > 0.0):
        raise ValueError(f"variances must be positive, got ({var_q}, {var_p})")
    product = var_q * var_p
    if product < MIN_UNCERTAINTY - PRODUCT_SLACK:
        raise NotJointlyMeasurable(var_q, var_p)
    if abs(product - MIN_UNCERTAINTY) <= PURE_PRODUCT_TOL:
        return DensityOperator.pure(gaussian_state(grid, 1.0 / (4.0 * var_q), tail_tolerance=tail_tolerance))

    a = math.sqrt(var_p / (4.0 * var_q))
    core = gaussian_state(grid, a, tail_tolerance=tail_tolerance).amplitudes
    q_offsets, q_weights = _noise_weights(max(var_q - 1.0 / (4.0 * a), 0.0), grid.dx)
    p_offsets, p_weights = _noise_weights(max(var_p - a, 0.0), grid.dp)
    n = grid.n

    # Σ_k w_k V(k) P V(k)† = P ⊙ C with C_{mm'} = Σ_k w_k e^{2πi k (m - m')/n}.
    delta = np.arange(n)
    kernel = (p_weights[None, :] * np.exp(2j * math.pi * np.outer(delta, p_offsets) / n)).sum(axis=1)
    index = (delta[:, None] - delta[None, :]) % n
    boosted = np.outer(core, core.conj()) * kernel[index]

    matrix = np.zeros((n, n), dtype=np.complex128)
    for offset, weight in zip(q_offsets, q_weights):
        matrix += weight * np.roll(boosted, (int(offset), int(offset)), axis=(0, 1))
    logger.debug(
        f"Joint state for ({var_q}, {var_p}): core a={a:.6g}, "
        f"{q_offsets.size} position and {p_offsets.size} momentum displacements"
    )
    return DensityOperator.from_matrix(grid, matrix)


@dataclass(frozen=True)
class PauliReport:
    position_margin_distance: float
    momentum_margin_distance: float
    observable_distance: float
    rho_variance: float
    nu_variance: float

    @property
    def margin_distance(self) -> float:
        return max(self.position_margin_distance, self.momentum_margin_distance)


def pauli_pair_demo(
    a: float, b: float, grid: GridSpec, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
) -> PauliReport:
    """Compare G_{T1} and G_{T2} for T1 = |φ_{a,b}⟩⟨φ_{a,b}|, T2 = |φ_{a,-b}⟩⟨φ_{a,-b}|.

    The margins coincide while the observables differ.
    """
    if b == 0.0:
        raise ValueError("b must be nonzero; with b = 0 both states coincide")
    first = DensityOperator.pure(gaussian_state(grid, a, b, tail_tolerance=tail_tolerance))
    second = DensityOperator.pure(gaussian_state(grid, a, -b, tail_tolerance=tail_tolerance))
    rho1, nu1 = margin_measures(first)
    rho2, nu2 = margin_measures(second)
    # Every cell effect is a unitary conjugate of the origin cell, so all cells share one norm.
    distance = float(np.max(np.abs(linalg.eigvalsh(first.matrix - second.matrix)))) / grid.n
    return PauliReport(
        position_margin_distance=distinguish_measures(rho1, rho2),
        momentum_margin_distance=distinguish_measures(nu1, nu2),
        observable_distance=distance,
        rho_variance=variance(rho1),
        nu_variance=variance(nu1),
    )


def self_fourier_gap(a: float, b: float, grid: GridSpec, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> float:
    """sup |φ_{a,b}(x) - φ̂_{a,b}(x)| in modulus.

    Positions and momenta must be the same points, so the grid has to be
    symmetric (see `symmetric_grid`).

    Raises:
        GridError: If dx != dp.
    """
    if not grid.is_symmetric:
        raise GridError(
            f"self_fourier_gap needs dx == dp, got dx={grid.dx:.6g}, dp={grid.dp:.6g}; use symmetric_grid({grid.n})"
        )
    psi = gaussian_state(grid, a, b, tail_tolerance=tail_tolerance)
    phi = fourier_transform(psi)
    return float(np.max(np.abs(np.abs(psi.wavefunction()) - np.abs(phi.wavefunction()))))


def fourier_equivalent_pairs(a: float) -> list[float]:
    """Values of b with a² + b² = 1/4, for which |φ_{a,b}| = |φ̂_{a,b}|."""
    rest = 0.25 - a * a
    if rest < 0.0:
        return []
    if rest == 0.0:
        return [0.0]
    return [math.sqrt(rest), -math.sqrt(rest)]


@dataclass(frozen=True)
class LocalizationReport:
    norm: float
    proper_subregion: bool
    full_support_margins: Optional[bool]
    below_one: bool

    @property
    def bound_expected(self) -> bool:
        """Whether ‖G(Z)‖ < 1 is expected: a proper region and margins with no empty cell."""
        return bool(self.proper_subregion and self.full_support_margins)

    @property
    def consistent(self) -> bool:
        return self.below_one or not self.bound_expected


def localization_bound(observable: JointObservable, region: PhaseRegion) -> LocalizationReport:
    """‖G(Z)‖ together with the flags deciding whether it must stay below 1."""
    norm = operator_norm(effect_of_region(observable, region))
    full_support: Optional[bool] = None
    if observable.state is not None:
        rho, nu = margin_measures(observable.state)
        full_support = bool(np.all(rho.masses > 0.0) and np.all(nu.masses > 0.0))
    return LocalizationReport(
        norm=norm,
        proper_subregion=region.is_proper,
        full_support_margins=full_support,
        below_one=norm < 1.0 - LOCALIZATION_MARGIN,
    )


def idempotency_defect(effect: Effect) -> float:
    """‖E² - E‖."""
    if effect.is_diagonal:
        return float(np.max(np.abs(effect.values ** 2 - effect.values)))
    m = effect.matrix
    return operator_norm(m @ m - m, effect.grid)


@dataclass(frozen=True)
class DiracMixtureReport:
    target: GridSet
    effect: Effect
    idempotency_defect: float
    match_defect: float


def _cells(length: float, spacing: float, label: str) -> int:
    cells = length / spacing
    rounded = int(round(cells))
    if abs(cells - rounded) > 1e-9:
        raise GridError(f"{label}={length} is not a whole number of cells (spacing {spacing})")
    return rounded


def dirac_mixture_projection(
    a: float, b: float, t: float, grid: GridSpec, kind: str = POSITION
) -> DiracMixtureReport:
    """E_ρ(X) for ρ = tδ_a + (1-t)δ_b and the half-period pattern X of period b - a.

    X is the cyclic rasterization of ∪_k [k(b-a), (k+1/2)(b-a)); on it E_ρ(X) equals the
    sharp projection onto X - a for every t. With kind="momentum" the same
    construction runs on the momentum lattice.

    Raises:
        GridError: If b - a is not an even number of cells dividing n, or a is off-lattice.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if kind not in (POSITION, MOMENTUM):
        raise ValueError(f"kind must be '{POSITION}' or '{MOMENTUM}', got {kind!r}")
    spacing = grid.dx if kind == POSITION else grid.dp
    period = _cells(b - a, spacing, "b - a")
    if period < 2 or period % 2:
        raise GridError(f"b - a must span an even number (>= 2) of cells, got {period}")
    if grid.n % period:
        raise GridError(f"period of {period} cells does not divide n={grid.n}")
    offset = _cells(a, spacing, "a")

    coordinate_cells = np.arange(grid.n) - grid.n // 2
    target = GridSet(grid, (coordinate_cells % period) < period // 2)
    rho = dirac_mixture(grid, [offset * spacing, (offset + period) * spacing], [t, 1.0 - t], kind)
    effect = position_effect(rho, target) if kind == POSITION else momentum_effect(rho, target)
    sharp = np.roll(target.mask, -offset).astype(np.float64)
    return DiracMixtureReport(
        target=target,
        effect=effect,
        idempotency_defect=idempotency_defect(effect),
        match_defect=float(np.max(np.abs(effect.values - sharp))),
    )
