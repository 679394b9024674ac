"""Covariant phase space observables, margins, averaging and sampling."""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from core.errors import GridError, PositivityError
from core.lattice import MOMENTUM, POSITION, gaussian_state, make_grid, symmetric_grid
from core.measures import GridSet, half_line
from core.operators import DensityOperator, operator_norm, random_density, weyl
from core.phasespace import (
    MAX_TABLE_POINTS,
    JointObservable,
    PhaseRegion,
    covariance_defect,
    covariant_average,
    covariant_observable,
    displacement_for_cell,
    effect_of_region,
    is_informationally_complete,
    margin_measures,
    margin_observables,
    observable_distance,
    outcome_distribution,
    outcome_table_duality,
    random_effect_table,
    sample_outcomes,
)
from core.povm import momentum_effect, position_effect
from core.verify import covariant_margin_table

from .conftest import random_mask


@pytest.fixture
def generator(small_grid, rng):
    return random_density(small_grid, rng)


class TestPhaseRegion:
    def test_shape_checked(self, tiny_grid):
        with pytest.raises(GridError):
            PhaseRegion(tiny_grid, np.ones((8, 7), dtype=bool))

    def test_product_and_projection(self, tiny_grid):
        xs = half_line(tiny_grid, 3)
        region = PhaseRegion.product(tiny_grid, xs)
        assert len(region) == 3 * 8
        assert region.is_proper
        assert not PhaseRegion.full(tiny_grid).is_proper
        assert not PhaseRegion.empty(tiny_grid).is_proper

    def test_shift(self, tiny_grid):
        region = PhaseRegion.from_cells(tiny_grid, [(5, 6)])
        assert [tuple(c) for c in region.shifted(4, 3).cells] == [(1, 1)]

    def test_from_cells_wraps(self, tiny_grid):
        assert [tuple(c) for c in PhaseRegion.from_cells(tiny_grid, [(-1, 9)]).cells] == [(7, 1)]


class TestJointObservable:
    def test_needs_exactly_one_source(self, tiny_grid):
        with pytest.raises(ValueError):
            JointObservable(tiny_grid)
        state = DensityOperator.maximally_mixed(tiny_grid)
        with pytest.raises(ValueError):
            JointObservable(tiny_grid, state=state, table=covariant_observable(state).full_table)

    def test_table_size_limit(self):
        grid = make_grid(MAX_TABLE_POINTS + 2, 0.1)
        with pytest.raises(MemoryError):
            covariant_observable(DensityOperator.maximally_mixed(grid)).full_table

    def test_table_must_resolve_identity(self, tiny_grid):
        table = covariant_observable(DensityOperator.maximally_mixed(tiny_grid)).full_table * 0.5
        with pytest.raises(PositivityError):
            JointObservable(tiny_grid, table=table)

    def test_table_must_be_positive(self, tiny_grid):
        table = np.array(covariant_observable(DensityOperator.maximally_mixed(tiny_grid)).full_table)
        table[0, 0] += np.eye(8) * 0.1
        table[0, 1] -= np.eye(8) * 0.1
        with pytest.raises(PositivityError):
            JointObservable(tiny_grid, table=table)

    def test_origin_cell_is_generator(self, generator):
        n = generator.grid.n
        observable = covariant_observable(generator)
        assert_allclose(observable.cell_matrix(n // 2, n // 2), generator.matrix / n, atol=1e-15)
        assert displacement_for_cell(generator.grid, n // 2, n // 2).j == 0


class TestGeneratedObservable:
    def test_resolution_of_identity(self, generator):
        table = covariant_observable(generator).full_table
        n = generator.grid.n
        assert operator_norm(table.sum(axis=(0, 1)) - np.eye(n)) <= 1e-10

    def test_full_region_is_identity(self, generator):
        full = effect_of_region(covariant_observable(generator), PhaseRegion.full(generator.grid))
        assert_allclose(full.matrix, np.eye(generator.grid.n), atol=1e-10)

    def test_covariance(self, generator):
        observable = covariant_observable(generator)
        assert covariance_defect(observable, [(1, 2), (7, 15), (0, 9)]) <= 1e-10

    def test_random_table_is_not_covariant(self, tiny_grid, rng):
        assert covariance_defect(random_effect_table(tiny_grid, rng), [(1, 0), (0, 1)]) > 1e-6

    def test_margin_theorem(self, generator, rng):
        grid = generator.grid
        q_margin, p_margin = margin_observables(covariant_observable(generator))
        rho, nu = margin_measures(generator)
        assert rho.axis == POSITION
        assert nu.axis == MOMENTUM
        for _ in range(10):
            xs = GridSet(grid, random_mask(rng, grid.n))
            ys = GridSet(grid, random_mask(rng, grid.n))
            assert operator_norm(q_margin[xs.mask].sum(axis=0) - position_effect(rho, xs).matrix) <= 1e-10
            assert operator_norm(p_margin[ys.mask].sum(axis=0) - momentum_effect(nu, ys).matrix) <= 1e-10

    def test_margins_of_product_regions(self, generator):
        grid = generator.grid
        xs = half_line(grid, 6)
        rho, _ = margin_measures(generator)
        effect = effect_of_region(covariant_observable(generator), PhaseRegion.product(grid, xs))
        assert_allclose(effect.matrix, position_effect(rho, xs).matrix, atol=1e-10)

    def test_margin_measures_are_reflected_distributions(self, continuum_grid):
        state = DensityOperator.pure(gaussian_state(continuum_grid, 0.5, c=1.0))
        rho, _ = margin_measures(state)
        peak = continuum_grid.positions[int(np.argmax(rho.masses))]
        assert peak == pytest.approx(-1.0, abs=continuum_grid.dx)

    def test_off_centre_gaussian_is_informationally_complete(self, tiny_grid):
        psi = gaussian_state(tiny_grid, 0.5, b_lin=0.4, c=-0.3, tail_tolerance=1e-5)
        report = is_informationally_complete(DensityOperator.pure(psi))
        assert report.complete
        assert report.rank == report.dimension == 64

    def test_even_gaussian_misses_parity_cells(self, tiny_grid):
        # A cyclically even state has zero overlap with W(j, n/2) and W(n/2, j) for odd j.
        state = DensityOperator.pure(gaussian_state(tiny_grid, 0.5, tail_tolerance=1e-5))
        report = is_informationally_complete(state)
        assert not report.complete
        assert report.rank == 56
        n = tiny_grid.n
        for j in (1, 3, 5, 7):
            for a, b in ((j, n // 2), (n // 2, j)):
                overlap = np.trace(state.matrix @ weyl(tiny_grid, a, b).matrix)
                assert abs(overlap) <= 1e-12

    def test_position_eigenstate_is_not(self, tiny_grid):
        e = np.zeros(8)
        e[4] = 1.0
        state = DensityOperator(tiny_grid, np.ones(1), e[:, None])
        report = is_informationally_complete(state)
        assert not report.complete
        assert report.rank == 8


class TestCovariantAverage:
    def test_output_is_covariant(self, tiny_grid, rng):
        averaged = covariant_average(random_effect_table(tiny_grid, rng))
        assert covariance_defect(averaged) <= 1e-10

    def test_idempotent(self, tiny_grid, rng):
        once = covariant_average(random_effect_table(tiny_grid, rng))
        assert observable_distance(covariant_average(once), once) <= 1e-10

    def test_fixes_generated_observables(self, tiny_grid, rng):
        observable = covariant_observable(random_density(tiny_grid, rng))
        assert observable_distance(covariant_average(observable), observable) <= 1e-10

    def test_keeps_covariant_margins(self, tiny_grid, rng):
        n = tiny_grid.n
        mixed = 0.5 * np.eye(n) / n + 0.5 * random_density(tiny_grid, rng, rank=1).matrix
        table = covariant_margin_table(DensityOperator.from_matrix(tiny_grid, mixed), 0.25 / n ** 2)
        assert covariance_defect(table, [(1, 0)]) > 1e-6
        q_before, p_before = margin_observables(table)
        q_after, p_after = margin_observables(covariant_average(table))
        assert_allclose(q_after, q_before, atol=1e-10)
        assert_allclose(p_after, p_before, atol=1e-10)

class TestOutcomes:
    def test_distribution_is_normalized(self, generator, rng):
        table = outcome_distribution(covariant_observable(generator), random_density(generator.grid, rng))
        assert table.shape == (16, 16)
        assert table.min() >= 0.0
        assert table.sum() == pytest.approx(1.0, abs=1e-12)

    def test_generated_path_matches_cell_sum(self, generator, rng):
        probe = random_density(generator.grid, rng)
        observable = covariant_observable(generator)
        explicit = JointObservable(generator.grid, table=observable.full_table)
        assert_allclose(
            outcome_distribution(observable, probe), outcome_distribution(explicit, probe), atol=1e-13
        )

    def test_gaussian_self_distribution(self):
        grid = make_grid(32, 0.5)
        n = grid.n
        state = DensityOperator.pure(gaussian_state(grid, 0.5))
        table = outcome_distribution(covariant_observable(state), state)
        assert np.unravel_index(int(np.argmax(table)), table.shape) == (n // 2, n // 2)
        assert table[n // 2, n // 2] == pytest.approx(1 / n, abs=1e-12)
        reflection = (-np.arange(n)) % n
        assert_allclose(table, table[np.ix_(reflection, reflection)], rtol=0, atol=1e-10)

    def test_duality(self, generator, rng):
        assert outcome_table_duality(generator, random_density(generator.grid, rng)) <= 1e-10

    def test_margin_statistics(self, generator, rng):
        probe = random_density(generator.grid, rng)
        table = outcome_distribution(covariant_observable(generator), probe)
        rho, _ = margin_measures(generator)
        xs = half_line(generator.grid, 7)
        assert table[xs.mask].sum() == pytest.approx(position_effect(rho, xs).expectation(probe), abs=1e-12)

    def test_sampling_is_deterministic(self, tiny_grid, rng):
        observable = covariant_observable(random_density(tiny_grid, rng))
        probe = random_density(tiny_grid, rng)
        first = sample_outcomes(observable, probe, 5000, 42)
        assert first.shape == (5000, 2)
        assert np.array_equal(first, sample_outcomes(observable, probe, 5000, 42))
        assert not np.array_equal(first, sample_outcomes(observable, probe, 5000, 43))

    def test_sampling_rejects_empty_draws(self, tiny_grid):
        state = DensityOperator.maximally_mixed(tiny_grid)
        with pytest.raises(ValueError):
            sample_outcomes(covariant_observable(state), state, 0, 1)

    def test_sampling_follows_distribution(self, tiny_grid, rng):
        observable = covariant_observable(random_density(tiny_grid, rng))
        probe = random_density(tiny_grid, rng)
        samples = sample_outcomes(observable, probe, 200_000, 7)
        counts = np.bincount(samples[:, 0] * 8 + samples[:, 1], minlength=64)
        expected = outcome_distribution(observable, probe).ravel() * 200_000
        keep = expected > 5
        statistic = np.sum((counts[keep] - expected[keep]) ** 2 / expected[keep])
        assert stats.chi2.sf(statistic, keep.sum() - 1) > 1e-4

    def test_sampled_position_variance(self):
        grid = make_grid(64, 0.4)
        n = grid.n
        count = 200_000
        state = DensityOperator.pure(gaussian_state(grid, 0.5))
        rho, _ = margin_measures(state)
        x = grid.positions
        p = np.array([position_effect(rho, GridSet.from_indices(grid, [m])).expectation(state) for m in range(n)])
        mu = float(np.dot(p, x))
        var = float(np.dot(p, (x - mu) ** 2))
        fourth = float(np.dot(p, (x - mu) ** 4))
        samples = sample_outcomes(covariant_observable(state), state, count, 2024)
        empirical = float(np.var(x[samples[:, 0]], ddof=1))
        assert var == pytest.approx(1.0, rel=1e-6)
        assert abs(empirical - var) <= 3.0 * np.sqrt((fourth - var ** 2) / count)

    @pytest.mark.slow
    def test_maximally_mixed_is_uniform(self):
        grid = symmetric_grid(8)
        state = DensityOperator.maximally_mixed(grid)
        samples = sample_outcomes(covariant_observable(state), state, 1_000_000, 11)
        counts = np.bincount(samples[:, 0] * 8 + samples[:, 1], minlength=64)
        assert stats.chisquare(counts).pvalue >= 1e-3

    @pytest.mark.slow
    def test_continuum_grid_is_fast_enough_to_tabulate(self, continuum_grid):
        state = DensityOperator.pure(gaussian_state(continuum_grid, 0.5))
        table = outcome_distribution(covariant_observable(state), state)
        assert table.sum() == pytest.approx(1.0, abs=1e-10)
