"""
Fuzzy position and momentum observables E_ρ and F_ν.

Position effects are diagonal in the position basis with entries ρ(X - x_m);
momentum effects are the same construction in the momentum basis, i.e.
F⁻¹ diag(ν(Y - p_k)) F. Dense momentum matrices are built lazily and cached.
"""
from collections import OrderedDict
from dataclasses import dataclass
from threading import Lock
from typing import Callable

import numpy as np

from .lattice import GridSpec
from .logging_config import get_logger
from .measures import GridSet, LineMeasure, half_line, translated_mass_table
from .operators import MOMENTUM, POSITION, Effect, operator_norm

logger = get_logger(__name__)


class MomentumEffectCache:
    """
    Bounded cache of momentum effects keyed by (grid, ν, Y).

    Thread Safety:
        Lookups and insertions share one Lock, so concurrent readers never see a
        half-built entry and only one writer inserts at a time. The dense matrix
        itself is materialized on the cached Effect the first time it is used.
    """

    def __init__(self, max_size: int = 256) -> None:
        self.max_size = max_size
        self._entries: OrderedDict[tuple, Effect] = OrderedDict()
        self._lock = Lock()

    def get_or_create(self, key: tuple, factory: Callable[[], Effect]) -> Effect:
        with self._lock:
            effect = self._entries.get(key)
            if effect is not None:
                self._entries.move_to_end(key)
                return effect
        effect = factory()
        with self._lock:
            existing = self._entries.get(key)
            if existing is not None:
                return existing
            self._entries[key] = effect
            if len(self._entries) > self.max_size:
                self._entries.popitem(last=False)
                logger.debug("Momentum effect cache full, evicted oldest entry")
        return effect

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


momentum_cache = MomentumEffectCache()


def _smeared_diagonal(mu: LineMeasure, target: GridSet) -> np.ndarray:
    # Entry m is μ(X - x_m); x_m sits m - n/2 cells from the origin.
    grid = mu.grid
    shifts = np.arange(grid.n) - grid.n // 2
    return translated_mass_table(mu, target, shifts)


def position_effect(rho: LineMeasure, target: GridSet) -> Effect:
    """E_ρ(X) = ∫ ρ(X - q) dΠ_Q(q), diagonal in the position basis."""
    rho.grid.require_same(target.grid)
    return Effect(rho.grid, POSITION, _smeared_diagonal(rho, target))


def momentum_effect(nu: LineMeasure, target: GridSet) -> Effect:
    """F_ν(Y) = ∫ ν(Y - p) dΠ_P(p) = F⁻¹ E_ν(Y) F."""
    nu.grid.require_same(target.grid)
    key = (nu.grid, nu.fingerprint(), target.mask.tobytes())
    return momentum_cache.get_or_create(
        key, lambda: Effect(nu.grid, MOMENTUM, _smeared_diagonal(nu, target))
    )


def sharp_position(target: GridSet) -> Effect:
    """Π_Q(X), the projection onto the cells of X."""
    return Effect(target.grid, POSITION, target.mask.astype(np.float64))


def sharp_momentum(target: GridSet) -> Effect:
    """Π_P(Y) = F⁻¹ Π_Q(Y) F."""
    return Effect(target.grid, MOMENTUM, target.mask.astype(np.float64))


@dataclass(frozen=True)
class OperatorMeasure:
    """Position (E_ρ) or momentum (F_ν) observable generated by a measure."""
    kind: str
    measure: LineMeasure

    def __post_init__(self) -> None:
        if self.kind not in (POSITION, MOMENTUM):
            raise ValueError(f"kind must be '{POSITION}' or '{MOMENTUM}', got {self.kind!r}")

    @property
    def grid(self) -> GridSpec:
        return self.measure.grid

    def effect(self, target: GridSet) -> Effect:
        if self.kind == POSITION:
            return position_effect(self.measure, target)
        return momentum_effect(self.measure, target)

    @property
    def is_sharp(self) -> bool:
        """Sharp exactly when the generating measure is a single Dirac atom."""
        return len(self.measure.atoms) == 1 and self.measure.is_atomic


def commutator_norm(first: Effect, second: Effect) -> float:
    """‖i(AB - BA)‖."""
    first.grid.require_same(second.grid)
    if first.is_diagonal and first.basis == second.basis:
        return 0.0
    a, b = first.matrix, second.matrix
    return operator_norm(1j * (a @ b - b @ a), first.grid)


def distinguish_measures(rho1: LineMeasure, rho2: LineMeasure) -> float:
    """max over half-lines X of ‖E_ρ1(X) - E_ρ2(X)‖.

    Both effects are diagonal, so the norm is the largest entry of the difference
    table. Translates of the half-lines {0..h-1} are all cyclic intervals, so the
    value is zero iff the two measures agree cell by cell.
    """
    rho1.grid.require_same(rho2.grid)
    diff = rho1.masses - rho2.masses
    if not np.any(diff):
        return 0.0
    n = rho1.grid.n
    cumulative = np.concatenate(([0.0], np.cumsum(np.concatenate((diff, diff)))))
    starts = np.arange(n)[:, None]
    lengths = np.arange(1, n)[None, :]
    windows = cumulative[starts + lengths] - cumulative[starts]
    return float(np.max(np.abs(windows)))


def projection_commutator_witness(projection: Effect, nu: LineMeasure, samples: int = 16) -> float:
    """Largest ‖[P, F_ν(Y)]‖ over evenly spaced half-lines Y.

    A nonzero value shows the projection P cannot sit in the range of a common
    observable with F_ν.
    """
    grid = nu.grid
    cuts = np.unique(np.linspace(1, grid.n - 1, num=min(samples, grid.n - 1)).astype(int))
    return max(commutator_norm(projection, momentum_effect(nu, half_line(grid, h))) for h in cuts)
