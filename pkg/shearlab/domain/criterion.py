from __future__ import annotations
import itertools
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ValidationError
from .flows import VelocityField

logger = logging.getLogger(__name__)

SHEAR_CONSISTENT = "shear-consistent"
SHEAR_VIOLATED = "shear-violated"
INCONCLUSIVE = "inconclusive"

DEFAULT_DELTAS = (0.08, 0.04, 0.02, 0.01)
DEFAULT_GRIDS = {1: 8192, 2: 256}
VIOLATION_FRACTION = 0.01


class NotEvaluable(ValidationError):
    pass


def default_grid(n: int) -> int:
    return DEFAULT_GRIDS.get(n, 48)


def primitive_frequencies(d: int, cutoff: int) -> Iterator[Tuple[int, ...]]:
    '''
    Primitive ξ with ||ξ||∞ <= cutoff, one of each ±ξ pair. Every other
    frequency is k ξ for one of these, and the sublevel sets of kξ are those
    of ξ at δ / k.
    '''
    for xi in itertools.product(range(-cutoff, cutoff + 1), repeat=d):
        nonzero = [k for k in xi if k]
        if not nonzero or nonzero[0] < 0:
            continue
        if reduce(math.gcd, (abs(k) for k in nonzero)) == 1:
            yield xi


def _gradients(v: VelocityField, grid: int) -> np.ndarray:
    if v.n == 0:
        raise ValidationError("the criterion needs a base of positive dimension")
    if grid < 16:
        raise ValidationError(f"grid must be >= 16, got {grid}")
    centers = v.chart.cell_centers(grid)
    jacobian = v.jacobian(centers, steps=v.chart.widths / (8 * grid))
    if not np.all(np.isfinite(jacobian)):
        raise NotEvaluable(f"{v!r} is not evaluable on its chart")
    return jacobian


def _measure(jacobian: np.ndarray, xi, deltas, volume: float) -> np.ndarray:
    norms = np.linalg.norm(np.einsum("d,Ndn->Nn", np.asarray(xi, dtype=float), jacobian), axis=1)
    # a gradient of norm exactly δ belongs to the sublevel set
    inside = norms[None, :] <= np.asarray(deltas, dtype=float)[:, None]
    return inside.mean(axis=1) * volume


def sublevel_measure(v: VelocityField, xi: Sequence[int], delta: float, grid: int) -> float:
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    if len(xi) != v.d:
        raise ValidationError(f"frequency {tuple(xi)} does not live in Z^{v.d}")
    return float(_measure(_gradients(v, grid), xi, [delta], v.chart.volume)[0])


@dataclass(frozen=True)
class Ladder:
    xi: Tuple[int, ...]
    deltas: Tuple[float, ...]
    measures: Tuple[float, ...]

    @property
    def rows(self):
        return list(zip(self.deltas, self.measures))

    def verdict(self, volume: float) -> str:
        first, previous, last = self.measures[0], self.measures[-2], self.measures[-1]
        threshold = VIOLATION_FRACTION * volume
        if last > threshold and last >= 0.75 * previous:
            return SHEAR_VIOLATED
        if last <= 2 * (self.deltas[-1] / self.deltas[0]) * first and last < threshold:
            return SHEAR_CONSISTENT
        return INCONCLUSIVE


@dataclass(frozen=True)
class CriterionReport:
    ladders: Tuple[Ladder, ...]
    verdict: str
    grid: int
    xi_cutoff: int
    volume: float
    witness: Optional[Tuple[int, ...]] = None

    def rows(self):
        for ladder in self.ladders:
            for delta, measure in ladder.rows:
                yield ladder.xi, delta, measure


def criterion_report(v: VelocityField, xi_cutoff: int = 8, deltas: Sequence[float] = DEFAULT_DELTAS,
                     grid: Optional[int] = None) -> CriterionReport:
    if xi_cutoff < 1:
        raise ValidationError(f"xi cutoff must be >= 1, got {xi_cutoff}")
    deltas = tuple(sorted((float(delta) for delta in deltas), reverse=True))
    if len(deltas) < 2 or deltas[-1] <= 0:
        raise ValidationError("the delta ladder needs at least two positive entries")
    grid = grid or default_grid(v.n)
    jacobian = _gradients(v, grid)
    volume = v.chart.volume
    ladders = []
    verdict, witness = SHEAR_CONSISTENT, None
    for xi in primitive_frequencies(v.d, xi_cutoff):
        ladder = Ladder(xi, deltas, tuple(float(m) for m in _measure(jacobian, xi, deltas, volume)))
        ladders.append(ladder)
        outcome = ladder.verdict(volume)
        if outcome == SHEAR_VIOLATED and verdict != SHEAR_VIOLATED:
            verdict, witness = SHEAR_VIOLATED, xi
        elif outcome == INCONCLUSIVE and verdict == SHEAR_CONSISTENT:
            verdict, witness = INCONCLUSIVE, xi
    logger.debug("criterion on %r: %s over %d frequencies (witness %s)", v, verdict, len(ladders), witness)
    return CriterionReport(tuple(ladders), verdict, grid, xi_cutoff, volume, witness)


def tilt_bump(v: VelocityField):
    '''χ(x) = 1 + (x_n - lower_n) / 2 width_n: positive, smooth and non-constant on the chart.'''
    lower, width = v.chart.lower[-1], v.chart.widths[-1]
    return lambda x: 1 + (x[:, -1] - lower) / (2 * width)


def perturbation_smoke(v: VelocityField, amount: float, direction: Sequence[int], xi_cutoff: int = 8,
                       deltas: Sequence[float] = DEFAULT_DELTAS,
                       grid: Optional[int] = None) -> Tuple[CriterionReport, CriterionReport]:
    '''Criterion before and after the perturbation v + amount * x1 * χ * direction.'''
    before = criterion_report(v, xi_cutoff, deltas, grid)
    after = criterion_report(v.perturbed(amount, direction, tilt_bump(v)), xi_cutoff, deltas, grid)
    return before, after
