"""
Verification suite behind the `verify` command.

Each check measures one quantity on a fixed, seeded instance and compares it
with a tolerance. Most checks bound the value from above; checks marked
lower_bound require value >= tolerance. Results are always reported sorted
by name, whatever order the thread pool finished them in.
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .analysis import (
    dirac_mixture_projection,
    gaussian_joint_state,
    localization_bound,
    pauli_pair_demo,
    self_fourier_gap,
    uncertainty_product,
)
from .configuration import ExperimentConfig, JointStateRequest, build_grid
from .errors import NotJointlyMeasurable, PhaseSpaceError
from .lattice import MOMENTUM, fourier_transform, gaussian_state, gaussian_transform, make_grid, symmetric_grid
from .logging_config import get_logger
from .measures import GridSet, from_masses, gaussian_measure, half_line, interval, variance
from .operators import DensityOperator, modulation, operator_norm, random_density, translation
from .phasespace import (
    JointObservable,
    PhaseRegion,
    covariance_defect,
    covariant_average,
    covariant_observable,
    is_informationally_complete,
    margin_measures,
    margin_observables,
    observable_distance,
    outcome_table_duality,
    random_effect_table,
    sample_outcomes,
)
from .povm import (
    commutator_norm,
    momentum_effect,
    position_effect,
    projection_commutator_witness,
    sharp_momentum,
    sharp_position,
)

logger = get_logger(__name__)

REPORT_SCHEMA = "jointphasespace.verify"
REPORT_SCHEMA_VERSION = 2

# Stable result labels, keyed by the check-name prefix.
ANCHORS = {
    "covariance": "covariance-of-margin-observables",
    "resolution_of_identity": "generated-observable-normalization",
    "margin_theorem": "margins-of-generated-observable",
    "gaussian_transform": "gaussian-fourier-transform",
    "uncertainty": "margin-uncertainty-relation",
    "pauli": "equal-margins-pair",
    "self_fourier": "fourier-equivalent-gaussians",
    "localization": "region-norm-below-one",
    "dirac_mixture": "sharp-effect-from-dirac-mixture",
    "covariant_average": "covariant-averaging",
    "joint_state": "joint-measurability-condition",
    "noncommutativity": "total-noncommutativity",
    "sampling": "outcome-sampling",
    "informational_completeness": "injectivity-of-generation",
    "outcome_duality": "outcome-table-duality",
}

SMALL_N = 16
TINY_N = 8
SMALL_TAIL = 1e-9
TINY_TAIL = 1e-5
LOCALIZATION_DX = 0.5
LOCALIZATION_TAIL = 1e-6


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    description: str
    tolerance: float
    run: Callable[[int], float]
    lower_bound: bool = False


@dataclass(frozen=True)
class CheckResult:
    name: str
    anchor: str
    description: str
    passed: bool
    value: float
    tolerance: float
    lower_bound: bool
    seconds: float
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "description": self.description,
            "passed": self.passed,
            "value": self.value if math.isfinite(self.value) else None,
            "tolerance": self.tolerance,
            "bound": "lower" if self.lower_bound else "upper",
            "seconds": round(self.seconds, 3),
            "error": self.error,
        }


@dataclass
class VerifyReport:
    results: list[CheckResult]
    requests: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "schema_version": REPORT_SCHEMA_VERSION,
            "version": ExperimentConfig.VERSION,
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.results],
            "requests": self.requests,
        }


CHECKS: list[Check] = []


def check(name: str, description: str, tolerance: float, lower_bound: bool = False):
    anchor = ANCHORS[name.split(".")[0]]

    def register(fn: Callable[[int], float]) -> Callable[[int], float]:
        CHECKS.append(Check(name, anchor, description, tolerance, fn, lower_bound))
        return fn
    return register


def _small_grid():
    return symmetric_grid(SMALL_N)


def _random_set(grid, rng: np.random.Generator) -> GridSet:
    mask = rng.random(grid.n) < 0.5
    mask[rng.integers(grid.n)] = True
    return GridSet(grid, mask)


@check("covariance.position_exact", "translation covariance of position effects, bit for bit", 0.0)
def _position_covariance(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = _small_grid()
    worst = 0.0
    for _ in range(50):
        rho = from_masses(grid, rng.random(grid.n))
        target = _random_set(grid, rng)
        j = int(rng.integers(grid.n))
        moved = position_effect(rho, target.shifted(j)).values
        worst = max(worst, float(np.max(np.abs(moved - np.roll(position_effect(rho, target).values, j)))))
    return worst


@check("covariance.momentum_dense", "boost covariance and translation invariance of momentum effects", 1e-10)
def _momentum_covariance(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = _small_grid()
    worst = 0.0
    for _ in range(50):
        nu = from_masses(grid, rng.random(grid.n), MOMENTUM)
        target = _random_set(grid, rng)
        j, k = (int(v) for v in rng.integers(grid.n, size=2))
        base = momentum_effect(nu, target).matrix
        boosted = modulation(grid, k).conjugate(base)
        translated = translation(grid, j).conjugate(base)
        worst = max(
            worst,
            float(np.max(np.abs(boosted - momentum_effect(nu, target.shifted(k)).matrix))),
            float(np.max(np.abs(translated - base))),
        )
    return worst


@check("covariance.phase_space", "Weyl covariance of the generated observable", 1e-10)
def _phase_space_covariance(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = _small_grid()
    worst = 0.0
    for _ in range(5):
        observable = covariant_observable(random_density(grid, rng))
        shifts = [tuple(int(v) for v in rng.integers(grid.n, size=2)) for _ in range(10)]
        worst = max(worst, covariance_defect(observable, shifts))
    return worst


@check("resolution_of_identity", "(1/n) Σ W T W† = I", 1e-10)
def _resolution_of_identity(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = _small_grid()
    worst = 0.0
    for _ in range(10):
        table = covariant_observable(random_density(grid, rng)).full_table
        worst = max(worst, operator_norm(table.sum(axis=(0, 1)) - np.eye(grid.n), grid))
    return worst


@check("margin_theorem", "margins of G_T are E_ρ and F_ν with ρ, ν read off T", 1e-10)
def _margin_theorem(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = _small_grid()
    worst = 0.0
    for _ in range(10):
        state = random_density(grid, rng)
        q_margin, p_margin = margin_observables(covariant_observable(state))
        rho, nu = margin_measures(state)
        for _ in range(20):
            xs = _random_set(grid, rng)
            ys = _random_set(grid, rng)
            worst = max(
                worst,
                operator_norm(q_margin[xs.mask].sum(axis=0) - position_effect(rho, xs).matrix, grid),
                operator_norm(p_margin[ys.mask].sum(axis=0) - momentum_effect(nu, ys).matrix, grid),
            )
    return worst


@check("gaussian_transform", "discrete Fourier transform of φ_{a,b} against its closed form", 1e-6)
def _gaussian_transform(seed: int) -> float:
    grid = make_grid(1024, 0.05)
    worst = 0.0
    for a in (0.25, 0.5, 1.0):
        for b in (0.0, 0.5):
            numeric = fourier_transform(gaussian_state(grid, a, b)).amplitudes
            worst = max(worst, float(np.max(np.abs(numeric - gaussian_transform(grid, a, b)))))
    return worst


@check("uncertainty.random_pairs", "Var·Var >= 1 for margin statistics of G_T", 0.98, lower_bound=True)
def _uncertainty_random(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = make_grid(1024, 0.05)
    lowest = math.inf
    for _ in range(50):
        probe = gaussian_state(
            grid, rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)
        )
        generator = gaussian_state(grid, rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0))
        report = uncertainty_product(DensityOperator.pure(generator), DensityOperator.pure(probe))
        lowest = min(lowest, report.product)
    return lowest


@check("uncertainty.equality", "minimum-uncertainty Gaussian saturates Var·Var = 1", 0.02)
def _uncertainty_equality(seed: int) -> float:
    grid = make_grid(1024, 0.05)
    state = DensityOperator.pure(gaussian_state(grid, 0.5))
    return abs(uncertainty_product(state, state).product - 1.0)


@check("pauli.margins", "φ_{a,b} and φ_{a,-b} generate equal margins", 1e-8)
def _pauli_margins(seed: int) -> float:
    return pauli_pair_demo(0.5, 0.5, _small_grid(), tail_tolerance=SMALL_TAIL).margin_distance


@check("pauli.observables", "φ_{a,b} and φ_{a,-b} generate different observables", 1e-6, lower_bound=True)
def _pauli_observables(seed: int) -> float:
    return pauli_pair_demo(0.5, 0.5, _small_grid(), tail_tolerance=SMALL_TAIL).observable_distance


@check("self_fourier.equivalent", "|φ_{a,b}| = |φ̂_{a,b}| when a² + b² = 1/4", 1e-6)
def _self_fourier_equivalent(seed: int) -> float:
    grid = symmetric_grid(1024)
    return max(self_fourier_gap(0.3, 0.4, grid), self_fourier_gap(0.4, -0.3, grid))


@check("self_fourier.inequivalent", "|φ_{a,b}| ≠ |φ̂_{a,b}| off the circle a² + b² = 1/4", 0.05, lower_bound=True)
def _self_fourier_inequivalent(seed: int) -> float:
    return self_fourier_gap(1.0, 0.0, symmetric_grid(1024))


def _localization_observable() -> JointObservable:
    grid = make_grid(SMALL_N, LOCALIZATION_DX)
    return covariant_observable(DensityOperator.pure(gaussian_state(grid, 0.5, tail_tolerance=LOCALIZATION_TAIL)))


@check("localization.single_cell", "a single cell has norm 1/n", 1e-10)
def _localization_single(seed: int) -> float:
    observable = _localization_observable()
    n = observable.grid.n
    region = PhaseRegion.from_cells(observable.grid, [(n // 2, n // 2)])
    return abs(localization_bound(observable, region).norm - 1.0 / n)


@check("localization.half_region", "the left half-plane has norm below 0.999 for a Gaussian generator", 0.999)
def _localization_half(seed: int) -> float:
    observable = _localization_observable()
    grid = observable.grid
    region = PhaseRegion.product(grid, half_line(grid, grid.n // 2))
    return localization_bound(observable, region).norm


@check("localization.full", "the whole phase space has norm 1", 1e-10)
def _localization_full(seed: int) -> float:
    observable = _localization_observable()
    return abs(localization_bound(observable, PhaseRegion.full(observable.grid)).norm - 1.0)


@check("dirac_mixture.projection", "tδ_a + (1-t)δ_b yields a sharp effect on the half-period pattern", 1e-12)
def _dirac_mixture(seed: int) -> float:
    grid = make_grid(64, 0.25)
    worst = 0.0
    for t in (0.3, 0.5, 0.7):
        report = dirac_mixture_projection(0.0, 1.0, t, grid)
        worst = max(worst, report.idempotency_defect, report.match_defect)
    return worst


def covariant_margin_table(state: DensityOperator, epsilon: float) -> JointObservable:
    """G_T plus ε(-1)^{c+d} I: covariant margins but a non-covariant joint table."""
    grid = state.grid
    n = grid.n
    signs = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    table = covariant_observable(state).full_table + epsilon * signs[:, :, None, None] * np.eye(n)
    return JointObservable(grid, table=table)


@check("covariant_average.covariance", "the averaged table is covariant", 1e-10)
def _average_covariance(seed: int) -> float:
    grid = symmetric_grid(TINY_N)
    return covariance_defect(covariant_average(random_effect_table(grid, np.random.default_rng(seed))))


@check("covariant_average.idempotence", "averaging a covariant table changes nothing", 1e-10)
def _average_idempotence(seed: int) -> float:
    grid = symmetric_grid(TINY_N)
    once = covariant_average(random_effect_table(grid, np.random.default_rng(seed)))
    return observable_distance(covariant_average(once), once)


@check("covariant_average.fixed_point", "G_T is a fixed point of averaging", 1e-10)
def _average_fixed_point(seed: int) -> float:
    rng = np.random.default_rng(seed)
    observable = covariant_observable(random_density(symmetric_grid(TINY_N), rng))
    return observable_distance(covariant_average(observable), observable)


@check("covariant_average.margins", "averaging keeps covariant margins", 1e-10)
def _average_margins(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = symmetric_grid(TINY_N)
    n = grid.n
    eta = 0.5
    mixed = (1.0 - eta) * np.eye(n) / n + eta * random_density(grid, rng, rank=1).matrix
    table = covariant_margin_table(DensityOperator.from_matrix(grid, mixed), 0.5 * (1.0 - eta) / n ** 2)
    q_before, p_before = margin_observables(table)
    q_after, p_after = margin_observables(covariant_average(table))
    return max(float(np.max(np.abs(q_after - q_before))), float(np.max(np.abs(p_after - p_before))))


@check("joint_state.necessity", "Var(ρ)Var(ν) < 1/4 has no joint state (deficit 0.24 at 0.1 × 0.1)", 1e-12)
def _joint_state_necessity(seed: int) -> float:
    try:
        gaussian_joint_state(0.1, 0.1, make_grid(512, 0.08))
    except NotJointlyMeasurable as e:
        return abs(e.deficit - 0.24)
    return math.inf


@check("joint_state.round_trip", "constructed joint states reproduce requested margin variances", 0.01)
def _joint_state_round_trip(seed: int) -> float:
    grid = make_grid(512, 0.08)
    values = (0.25, 0.5, 1.0, 2.0, 4.0)
    worst = 0.0
    for var_q in values:
        for var_p in values:
            if var_q * var_p < 0.25:
                continue
            rho, nu = margin_measures(gaussian_joint_state(var_q, var_p, grid))
            worst = max(worst, abs(variance(rho) / var_q - 1.0), abs(variance(nu) / var_p - 1.0))
    return worst


@check("noncommutativity.instances", "position and momentum effects fail to commute", 1e-3, lower_bound=True)
def _noncommutativity(seed: int) -> float:
    grid = make_grid(64, 0.4)
    sharp = commutator_norm(sharp_position(half_line(grid, 32)), sharp_momentum(half_line(grid, 32)))
    rho = gaussian_measure(grid, 0.5)
    nu = gaussian_measure(grid, 0.5, axis=MOMENTUM)
    fuzzy = commutator_norm(
        position_effect(rho, interval(grid, -1.0, 1.0)),
        momentum_effect(nu, interval(grid, -1.0, 1.0, MOMENTUM)),
    )
    mixture_grid = make_grid(64, 0.25)
    projection = dirac_mixture_projection(0.0, 1.0, 0.5, mixture_grid).effect
    witness = projection_commutator_witness(projection, gaussian_measure(mixture_grid, 0.5, axis=MOMENTUM))
    logger.debug(f"Commutator norms: sharp={sharp:.6g} fuzzy={fuzzy:.6g} projection={witness:.6g}")
    return min(sharp, fuzzy, witness)


@check("noncommutativity.self", "every effect commutes with itself", 0.0)
def _self_commutator(seed: int) -> float:
    grid = make_grid(64, 0.4)
    effect = momentum_effect(gaussian_measure(grid, 0.5, axis=MOMENTUM), half_line(grid, 40))
    return commutator_norm(effect, effect)


@check("sampling.determinism", "equal seeds give identical samples", 0.0)
def _sampling_determinism(seed: int) -> float:
    grid = symmetric_grid(TINY_N)
    rng = np.random.default_rng(seed)
    observable = covariant_observable(random_density(grid, rng))
    probe = random_density(grid, rng)
    first = sample_outcomes(observable, probe, 10_000, seed)
    second = sample_outcomes(observable, probe, 10_000, seed)
    return float(np.sum(np.any(first != second, axis=1)))


@check("sampling.uniformity", "I/n gives uniform outcomes (chi-square p-value)", 1e-3, lower_bound=True)
def _sampling_uniformity(seed: int) -> float:
    grid = symmetric_grid(TINY_N)
    state = DensityOperator.maximally_mixed(grid)
    samples = sample_outcomes(covariant_observable(state), state, 1_000_000, seed)
    counts = np.bincount(samples[:, 0] * grid.n + samples[:, 1], minlength=grid.n ** 2)
    return float(stats.chisquare(counts).pvalue)


@check(
    "informational_completeness",
    "Weyl conjugates of an off-centre, boosted Gaussian span the operator space (missing rank)",
    0.0,
)
def _informational_completeness(seed: int) -> float:
    # Cyclically even states have zero overlap with W(j, n/2) and W(n/2, k) for odd j, k.
    grid = symmetric_grid(TINY_N)
    state = gaussian_state(grid, 0.5, b_lin=0.4, c=-0.3, tail_tolerance=TINY_TAIL)
    report = is_informationally_complete(DensityOperator.pure(state))
    return float(report.dimension - report.rank)


@check("outcome_duality", "p^{G_T}_S(Z) = p^{G_S}_T(-Z)", 1e-10)
def _outcome_duality(seed: int) -> float:
    rng = np.random.default_rng(seed)
    grid = symmetric_grid(TINY_N)
    return outcome_table_duality(random_density(grid, rng), random_density(grid, rng))


def _evaluate(item: Check, seed: int, tolerance_override: Optional[float]) -> CheckResult:
    tolerance = item.tolerance if tolerance_override is None else tolerance_override
    start = time.perf_counter()
    error = None
    try:
        value = float(item.run(seed))
    except (PhaseSpaceError, ValueError, ArithmeticError, MemoryError) as e:
        logger.error(f"Check {item.name} raised {type(e).__name__}: {e}")
        value, error = math.nan, f"{type(e).__name__}: {e}"
    elapsed = time.perf_counter() - start
    if error is not None or math.isnan(value):
        passed = False
    elif item.lower_bound:
        passed = value >= tolerance
    else:
        passed = value <= tolerance
    logger.debug(f"{item.name}: value={value!r} tolerance={tolerance!r} passed={passed} ({elapsed:.2f}s)")
    return CheckResult(item.name, item.anchor, item.description, passed, value, tolerance, item.lower_bound, elapsed, error)


def _joint_state_request(request: JointStateRequest, config: ExperimentConfig) -> dict:
    entry: dict = {"kind": "joint_state", "var_q": request.var_q, "var_p": request.var_p}
    try:
        grid = build_grid(config.grid)
        rho, nu = margin_measures(gaussian_joint_state(request.var_q, request.var_p, grid, config.grid.tail_tolerance))
    except NotJointlyMeasurable as e:
        entry.update({"result": "NotJointlyMeasurable", "deficit": e.deficit})
        return entry
    except PhaseSpaceError as e:
        entry.update({"result": type(e).__name__, "message": str(e)})
        return entry
    entry.update({"result": "constructed", "rho_variance": variance(rho), "nu_variance": variance(nu)})
    return entry


def run_suite(config: Optional[ExperimentConfig] = None, names: Optional[list[str]] = None) -> VerifyReport:
    """Run every registered check (or the named subset) and collect a report."""
    config = config or ExperimentConfig()
    settings = config.verify
    selected = [c for c in CHECKS if names is None or c.name in names]
    logger.info(f"Running {len(selected)} checks (parallel={settings.parallel})")

    def run(item: Check) -> CheckResult:
        return _evaluate(item, config.seed, settings.tolerance_override)

    if settings.parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(run, selected))
    else:
        results = [run(item) for item in selected]
    results.sort(key=lambda r: r.name)

    requests = []
    if config.joint_state is not None:
        requests.append(_joint_state_request(config.joint_state, config))

    report = VerifyReport(results, requests)
    for failure in report.failures:
        logger.warning(f"Check failed: {failure.name} value={failure.value!r} tolerance={failure.tolerance!r}")
    return report
