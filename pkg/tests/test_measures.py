"""Lattice measures, cell sets, translation and convolution."""
import itertools
import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import GridError, PositivityError
from core.lattice import MOMENTUM, POSITION, make_grid
from core.measures import (
    GridSet,
    LineMeasure,
    boundary_mass,
    convolve,
    dirac,
    dirac_mixture,
    from_atoms,
    from_masses,
    gaussian_measure,
    half_line,
    interval,
    is_tail_safe,
    mean,
    translate,
    translated_mass,
    translated_mass_table,
    uniform,
    variance,
)


@pytest.fixture
def grid():
    return make_grid(256, 0.1)


class TestGridSet:
    def test_from_indices(self, tiny_grid):
        s = GridSet.from_indices(tiny_grid, [0, 3])
        assert list(s.indices) == [0, 3]
        assert len(s) == 2
        with pytest.raises(GridError):
            GridSet.from_indices(tiny_grid, [8])

    def test_shift_is_cyclic(self, tiny_grid):
        s = GridSet.from_indices(tiny_grid, [6, 7])
        assert list(s.shifted(3).indices) == [1, 2]
        assert s.shifted(8) == s

    def test_set_algebra(self, tiny_grid):
        a = half_line(tiny_grid, 4)
        b = GridSet.from_indices(tiny_grid, [3, 4])
        assert list(a.union(b).indices) == [0, 1, 2, 3, 4]
        assert a.complement().union(a) == GridSet.full(tiny_grid)
        assert GridSet.empty(tiny_grid).is_subset(a)
        assert not b.is_subset(a)

    def test_hashable(self, tiny_grid):
        assert len({half_line(tiny_grid, 2), half_line(tiny_grid, 2), half_line(tiny_grid, 3)}) == 2

    def test_interval_on_each_axis(self, grid):
        xs = interval(grid, -0.25, 0.25)
        assert_allclose(grid.positions[xs.mask], [-0.2, -0.1, 0.0, 0.1, 0.2], atol=1e-12)
        ps = interval(grid, 0.0, 3 * grid.dp, MOMENTUM)
        assert len(ps) == 3


class TestConstruction:
    def test_total_mass_checked(self, tiny_grid):
        with pytest.raises(PositivityError):
            LineMeasure(tiny_grid, ((0, 0.5),), np.zeros(8))

    def test_negative_density_rejected(self, tiny_grid):
        density = np.zeros(8)
        density[0], density[1] = -1.0, 2.0 / tiny_grid.dx
        with pytest.raises(PositivityError):
            LineMeasure(tiny_grid, (), density)

    def test_atom_out_of_range(self, tiny_grid):
        with pytest.raises(GridError):
            from_atoms(tiny_grid, [(8, 1.0)])

    def test_unknown_axis(self, tiny_grid):
        with pytest.raises(ValueError):
            from_atoms(tiny_grid, [(0, 1.0)], axis="energy")

    def test_dirac_snaps_to_nearest_cell(self, grid):
        assert dirac(grid, 0.0).atoms == ((128, 1.0),)
        assert dirac(grid, 0.26).atoms == ((131, 1.0),)
        assert dirac(grid, -0.14).atoms == ((127, 1.0),)

    def test_dirac_tie_goes_down(self):
        grid = make_grid(8, 1.0)
        assert dirac(grid, 0.5).atoms == ((4, 1.0),)
        assert dirac(grid, -1.5).atoms == ((2, 1.0),)

    def test_dirac_outside_grid(self, grid):
        with pytest.raises(GridError):
            dirac(grid, 100.0)

    def test_dirac_on_momentum_axis(self, grid):
        mu = dirac(grid, 2 * grid.dp, MOMENTUM)
        assert mu.axis == MOMENTUM
        assert mu.atoms == ((130, 1.0),)
        assert mean(mu) == pytest.approx(2 * grid.dp)

    def test_dirac_mixture_merges_cells(self, grid):
        mu = dirac_mixture(grid, [0.0, 0.01, 1.0], [0.25, 0.25, 0.5])
        assert mu.atoms == ((128, 0.5), (138, 0.5))

    def test_from_masses_normalizes(self, tiny_grid):
        mu = from_masses(tiny_grid, np.arange(8.0))
        assert mu.masses.sum() == pytest.approx(1.0)
        assert_allclose(mu.masses, np.arange(8.0) / 28.0)
        with pytest.raises(PositivityError):
            from_masses(tiny_grid, np.zeros(8))

    def test_uniform(self, tiny_grid):
        assert_allclose(uniform(tiny_grid).masses, np.full(8, 1 / 8))
        assert_allclose(uniform(tiny_grid, MOMENTUM).density, np.full(8, 1 / (8 * tiny_grid.dp)))

    def test_equality_includes_axis(self, tiny_grid):
        assert uniform(tiny_grid) == uniform(tiny_grid)
        assert uniform(tiny_grid) != uniform(tiny_grid, MOMENTUM)
        assert hash(uniform(tiny_grid)) == hash(uniform(tiny_grid))

    def test_gaussian_measure_validation(self, grid):
        with pytest.raises(ValueError):
            gaussian_measure(grid, 0.0)


class TestMoments:
    @pytest.mark.parametrize("var", [0.1, 0.5, 1.0])
    def test_gaussian_variance(self, grid, var):
        mu = gaussian_measure(grid, var, mean=0.3)
        assert mean(mu) == pytest.approx(0.3, abs=1e-9)
        assert variance(mu) == pytest.approx(var, rel=1e-9)

    def test_momentum_variance_uses_momentum_spacing(self, grid):
        mu = gaussian_measure(grid, 4.0, axis=MOMENTUM)
        assert mu.spacing == grid.dp
        assert variance(mu) == pytest.approx(4.0, rel=1e-9)

    def test_boundary_warning(self, tiny_grid, caplog):
        with caplog.at_level(logging.WARNING, logger="JointPhaseSpace"):
            variance(uniform(tiny_grid))
        assert "boundary cells" in caplog.text

    def test_boundary_mass_band(self):
        grid = make_grid(64, 0.1)
        masses = np.zeros(64)
        masses[[0, 3, 4, 60, 63]] = 1.0
        mu = from_masses(grid, masses)
        # band is n/16 = 4 cells on each side
        assert boundary_mass(mu) == pytest.approx(0.8)
        assert not is_tail_safe(mu)
        assert is_tail_safe(gaussian_measure(grid, 0.1))


class TestTranslation:
    def test_translated_mass(self, tiny_grid):
        mu = from_atoms(tiny_grid, [(2, 0.25), (5, 0.75)])
        target = GridSet.from_indices(tiny_grid, [6])
        assert translated_mass(mu, target, 1) == pytest.approx(0.75)
        assert translated_mass(mu, target, 4) == pytest.approx(0.25)
        assert translated_mass(mu, target, 0) == 0.0

    def test_table_matches_scalar(self, grid, rng):
        mu = from_masses(grid, rng.random(grid.n))
        target = interval(grid, -1.0, 2.0)
        shifts = np.arange(-20, 20)
        table = translated_mass_table(mu, target, shifts)
        assert_allclose(table, [translated_mass(mu, target, int(s)) for s in shifts], rtol=0, atol=1e-15)

    def test_half_line_sweep_is_monotone(self, grid):
        n = grid.n
        mu = gaussian_measure(grid, 0.3)
        target = half_line(grid, n // 2)
        shifts = np.arange(-n // 4, n // 4 + 1)
        table = translated_mass_table(mu, target, shifts)
        direct = [mu.masses[(np.arange(n // 2) - s) % n].sum() for s in shifts]
        assert_allclose(table, direct, rtol=0, atol=1e-14)
        assert np.all(np.diff(table) <= 1e-14)
        assert table[0] == pytest.approx(1.0, abs=1e-12)
        assert table[-1] == pytest.approx(0.0, abs=1e-12)

    def test_translate_pushes_forward(self, grid, rng):
        mu = from_masses(grid, rng.random(grid.n))
        target = interval(grid, -1.0, 0.5)
        moved = translate(mu, 7)
        assert moved.masses.sum() == pytest.approx(1.0)
        assert translated_mass(moved, target, 0) == pytest.approx(translated_mass(mu, target, 7), abs=1e-14)

    def test_translate_keeps_axis(self, grid):
        assert translate(uniform(grid, MOMENTUM), 3).axis == MOMENTUM


class TestConvolution:
    def test_diracs_add(self, grid):
        out = convolve(dirac(grid, 0.5), dirac(grid, -1.2))
        assert out.is_atomic
        assert mean(out) == pytest.approx(-0.7, abs=1e-12)

    def test_dirac_shifts_density(self, grid):
        mu = gaussian_measure(grid, 0.3)
        out = convolve(dirac(grid, 1.0), mu)
        assert mean(out) == pytest.approx(1.0, abs=1e-9)
        assert variance(out) == pytest.approx(0.3, rel=1e-9)

    def test_variances_add(self, grid):
        out = convolve(gaussian_measure(grid, 0.2, mean=-0.5), gaussian_measure(grid, 0.7, mean=1.0))
        assert out.masses.sum() == pytest.approx(1.0, abs=1e-12)
        assert mean(out) == pytest.approx(0.5, abs=1e-9)
        assert variance(out) == pytest.approx(0.9, rel=1e-8)

    def test_mixed_atoms_and_density(self, grid):
        mixed = LineMeasure(grid, ((128, 0.5),), gaussian_measure(grid, 0.4).density * 0.5)
        out = convolve(mixed, dirac(grid, 0.3))
        assert out.atoms == ((131, 0.5),)
        assert out.masses.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_commutative_and_associative(self, seed):
        g = make_grid(64, 0.3)
        rng = np.random.default_rng(seed)
        density = from_masses(g, rng.random(g.n))
        cells = rng.choice(g.n, size=3, replace=False)
        atomic = from_atoms(g, zip((int(c) for c in cells), (0.2, 0.3, 0.5)))
        mixed = LineMeasure(g, ((int(rng.integers(g.n)), 0.4),), from_masses(g, rng.random(g.n)).density * 0.6)
        for first, second in itertools.combinations((density, atomic, mixed), 2):
            assert_allclose(convolve(first, second).masses, convolve(second, first).masses, rtol=0, atol=1e-12)
        left = convolve(convolve(density, atomic), mixed)
        right = convolve(density, convolve(atomic, mixed))
        assert_allclose(left.masses, right.masses, rtol=0, atol=1e-12)

    def test_axis_mismatch(self, grid):
        with pytest.raises(GridError):
            convolve(uniform(grid), uniform(grid, MOMENTUM))

    def test_axis_is_kept(self, grid):
        out = convolve(gaussian_measure(grid, 1.0, axis=MOMENTUM), gaussian_measure(grid, 2.0, axis=MOMENTUM))
        assert out.axis == MOMENTUM
        assert variance(out) == pytest.approx(3.0, rel=1e-8)

    def test_default_axis_is_position(self, grid):
        assert uniform(grid).axis == POSITION
