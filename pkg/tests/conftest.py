import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.lattice import make_grid, symmetric_grid  # noqa: E402
from core.povm import momentum_cache  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_grid():
    """n=8 with dx = dp."""
    return symmetric_grid(8)


@pytest.fixture
def small_grid():
    """n=16 with dx = dp."""
    return symmetric_grid(16)


@pytest.fixture
def continuum_grid():
    """Fine enough that sampled Gaussians behave like their continuum versions."""
    return make_grid(1024, 0.05)


@pytest.fixture(autouse=True)
def fresh_momentum_cache():
    momentum_cache.clear()
    yield
    momentum_cache.clear()


def random_mask(rng: np.random.Generator, n: int) -> np.ndarray:
    mask = rng.random(n) < 0.5
    mask[rng.integers(n)] = True
    return mask
