"""Weyl system, effects and density operators."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from core.errors import GridMismatchError, PositivityError
from core.lattice import MOMENTUM, POSITION, StateVector, fourier_matrix, gaussian_state, make_grid
from core.operators import (
    DENSE,
    DensityOperator,
    Effect,
    HermitianOperator,
    conjugate_density,
    modulation,
    operator_norm,
    random_density,
    translation,
    weyl,
)


def basis_vector(n, index):
    e = np.zeros(n, dtype=np.complex128)
    e[index] = 1.0
    return e


class TestDisplacement:
    def test_translation_shifts_cells(self, tiny_grid):
        u = translation(tiny_grid, 3)
        assert_allclose(u.apply(basis_vector(8, 6)), basis_vector(8, 1))

    def test_translation_reduces_index(self, tiny_grid):
        assert translation(tiny_grid, -1).j == 7
        assert modulation(tiny_grid, 9).k == 1

    def test_modulation_is_plane_wave(self, tiny_grid):
        v = modulation(tiny_grid, 2)
        expected = np.exp(1j * 2 * tiny_grid.dp * tiny_grid.positions)
        assert_allclose(v.apply(np.ones(8)), expected, atol=1e-12)

    @pytest.mark.parametrize("j, k", [(1, 1), (3, 5), (-2, 7), (4, 4)])
    def test_commutation_relation(self, small_grid, j, k):
        n = small_grid.n
        u = translation(small_grid, j).matrix
        v = modulation(small_grid, k).matrix
        assert_allclose(u @ v, np.exp(-2j * math.pi * j * k / n) * (v @ u), atol=1e-12)

    def test_weyl_is_unitary_with_symmetric_phase(self, small_grid):
        w = weyl(small_grid, 3, -5)
        assert_allclose(w.matrix @ w.matrix.conj().T, np.eye(16), atol=1e-12)
        assert w.phase == pytest.approx(np.exp(-1j * math.pi * 15 / 16))

    @settings(max_examples=25, deadline=None)
    @given(j=st.integers(-20, 20), k=st.integers(-20, 20), seed=st.integers(0, 2**31))
    def test_conjugate_matches_dense_product(self, j, k, seed):
        grid = make_grid(10, 0.4)
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        w = weyl(grid, j, k)
        d = w.matrix
        assert_allclose(w.conjugate(a), d @ a @ d.conj().T, atol=1e-12)
        assert_allclose(w.conjugate_adjoint(w.conjugate(a)), a, atol=1e-12)

    def test_adjoint_inverts_apply(self, tiny_grid, rng):
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        w = weyl(tiny_grid, 5, 3)
        assert_allclose(w.apply_adjoint(w.apply(psi)), psi, atol=1e-12)

    def test_call_checks_grid(self, tiny_grid):
        with pytest.raises(GridMismatchError):
            weyl(tiny_grid, 1, 1)(StateVector(make_grid(8, 0.3), np.ones(8)))

    def test_composition_law(self):
        grid = make_grid(4, 0.5)
        n = grid.n
        for j, k, jp, kp in itertools.product(range(n), repeat=4):
            product = weyl(grid, j, k).matrix @ weyl(grid, jp, kp).matrix
            phase = np.exp(1j * math.pi * (jp * k - j * kp) / n)
            assert_allclose(product, phase * weyl(grid, j + jp, k + kp).matrix, atol=1e-12)

    def test_group_average_resolves_identity(self, tiny_grid, rng):
        state = random_density(tiny_grid, rng)
        n = tiny_grid.n
        total = sum(weyl(tiny_grid, j, k).conjugate(state.matrix) for j in range(n) for k in range(n))
        assert_allclose(total / n, np.eye(n), atol=1e-12)


class TestEffect:
    def test_rejects_spectrum_outside_unit_interval(self, tiny_grid):
        with pytest.raises(PositivityError):
            Effect(tiny_grid, POSITION, np.full(8, 1.1))
        with pytest.raises(PositivityError):
            Effect(tiny_grid, MOMENTUM, np.full(8, -0.1))
        with pytest.raises(PositivityError):
            Effect.from_matrix(tiny_grid, 2.0 * np.eye(8))

    def test_rejects_unknown_basis_and_bad_shape(self, tiny_grid):
        with pytest.raises(ValueError):
            Effect(tiny_grid, "diagonal", np.zeros(8))
        with pytest.raises(GridMismatchError):
            Effect(tiny_grid, POSITION, np.zeros(6))

    def test_non_hermitian_dense_effect(self, tiny_grid):
        m = np.zeros((8, 8), dtype=complex)
        m[0, 1] = 0.5
        with pytest.raises(PositivityError):
            Effect.from_matrix(tiny_grid, m)

    def test_momentum_matrix_is_fourier_conjugate(self, small_grid, rng):
        values = rng.random(16)
        effect = Effect(small_grid, MOMENTUM, values)
        f = fourier_matrix(small_grid)
        assert_allclose(effect.matrix, f.conj().T @ np.diag(values) @ f, atol=1e-12)
        assert_allclose(effect.eigenvalues, np.sort(values))
        assert effect.is_diagonal

    def test_expectation_agrees_across_representations(self, small_grid, rng):
        state = random_density(small_grid, rng)
        values = rng.random(16)
        for basis in (POSITION, MOMENTUM):
            diagonal = Effect(small_grid, basis, values)
            dense = Effect(small_grid, DENSE, diagonal.matrix)
            assert diagonal.expectation(state) == pytest.approx(dense.expectation(state), abs=1e-12)


class TestDensityOperator:
    def test_pure_normalizes(self, tiny_grid):
        state = DensityOperator.pure(StateVector(tiny_grid, np.arange(8.0)))
        assert state.rank == 1
        assert state.purity() == pytest.approx(1.0)
        assert np.real(np.trace(state.matrix)) == pytest.approx(1.0)

    def test_maximally_mixed(self, tiny_grid):
        state = DensityOperator.maximally_mixed(tiny_grid)
        assert state.purity() == pytest.approx(1 / 8)
        assert_allclose(state.position_distribution(), np.full(8, 1 / 8))
        assert_allclose(state.momentum_distribution(), np.full(8, 1 / 8), atol=1e-15)

    def test_from_matrix_rejects_negative_spectrum(self, tiny_grid):
        m = np.diag([1.5, -0.5, 0, 0, 0, 0, 0, 0]).astype(complex)
        with pytest.raises(PositivityError):
            DensityOperator.from_matrix(tiny_grid, m)

    def test_weights_must_sum_to_one(self, tiny_grid):
        with pytest.raises(PositivityError):
            DensityOperator(tiny_grid, np.array([0.5]), basis_vector(8, 0)[:, None])

    def test_vectors_must_be_orthonormal(self, tiny_grid):
        vectors = np.stack([basis_vector(8, 0), basis_vector(8, 0)], axis=1)
        with pytest.raises(PositivityError):
            DensityOperator(tiny_grid, np.array([0.5, 0.5]), vectors)

    def test_mixture_of_overlapping_states(self, continuum_grid):
        first = gaussian_state(continuum_grid, 0.5, c=-0.5)
        second = gaussian_state(continuum_grid, 0.5, c=0.5)
        state = DensityOperator.mixture([first, second], [1.0, 3.0])
        assert state.rank == 2
        assert sum(state.weights) == pytest.approx(1.0)
        expected = 0.25 * first.probabilities() + 0.75 * second.probabilities()
        assert_allclose(state.position_distribution(), expected, atol=1e-12)

    def test_mixture_validation(self, tiny_grid):
        with pytest.raises(ValueError):
            DensityOperator.mixture([], [])
        with pytest.raises(PositivityError):
            DensityOperator.mixture([StateVector(tiny_grid, np.ones(8))], [-1.0])

    def test_distributions_are_probability_vectors(self, small_grid, rng):
        state = random_density(small_grid, rng, rank=3)
        assert state.rank == 3
        for dist in (state.position_distribution(), state.momentum_distribution()):
            assert dist.min() >= 0.0
            assert dist.sum() == pytest.approx(1.0, abs=1e-12)

    def test_conjugate_density_matches_matrix(self, small_grid, rng):
        state = random_density(small_grid, rng, rank=2)
        moved = conjugate_density(state, 4, -3)
        assert_allclose(moved.matrix, weyl(small_grid, 4, -3).conjugate(state.matrix), atol=1e-12)

    @pytest.mark.parametrize("j, k", [(1, 0), (5, 2), (-3, 11)])
    def test_conjugate_density_keeps_purity_and_shifts_position(self, small_grid, rng, j, k):
        state = random_density(small_grid, rng, rank=3)
        moved = conjugate_density(state, j, k)
        assert moved.purity() == pytest.approx(state.purity(), abs=1e-12)
        assert_allclose(moved.position_distribution(), np.roll(state.position_distribution(), j), atol=1e-12)


class TestOperatorNorm:
    def test_largest_absolute_eigenvalue(self, tiny_grid):
        assert operator_norm(np.diag([0.2, -0.9, 0.5, 0, 0, 0, 0, 0])) == pytest.approx(0.9)
        assert operator_norm(Effect(tiny_grid, POSITION, np.linspace(0, 0.7, 8))) == pytest.approx(0.7)

    @settings(max_examples=25, deadline=None)
    @given(n_half=st.integers(2, 12), seed=st.integers(0, 2**31))
    def test_matches_dense_spectral_norm(self, n_half, seed):
        n = 2 * n_half
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = 0.5 * (a + a.conj().T)
        assert operator_norm(h) == pytest.approx(np.linalg.norm(h, 2), rel=1e-10)
        assert operator_norm(HermitianOperator(make_grid(n, 0.3), h)) == pytest.approx(np.linalg.norm(h, 2), rel=1e-10)

    def test_rejects_non_hermitian(self):
        m = np.zeros((4, 4))
        m[0, 1] = 1.0
        with pytest.raises(PositivityError):
            operator_norm(m)

    def test_rejects_non_square(self):
        with pytest.raises(GridMismatchError):
            operator_norm(np.zeros((4, 3)))
