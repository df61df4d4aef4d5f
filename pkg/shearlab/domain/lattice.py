from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import ValidationError

Number = Union[int, float, str, Fraction]

RADIUS_BUDGET = {2: 1e5, 3: 2e3}
SURFACE = {2: 2 * math.pi, 3: 4 * math.pi}
GUARD_BAND = Fraction(1e-12)


class BudgetExceeded(ValidationError):
    pass


class UnsupportedDimension(ValidationError):
    pass


def _check_dim(n: int):
    if n not in SURFACE:
        raise UnsupportedDimension(f"lattice counts are implemented for n in (2, 3), not {n}")


@dataclass(frozen=True)
class ShellQuery:
    '''
    Integer points m with | ||m - center|| - radius | <= epsilon. Coordinates
    are held as exact fractions: floats count as the binary value they store,
    strings such as "0.1" as the decimal they spell.
    '''
    dim: int
    center: Tuple[Fraction, ...]
    radius: Fraction
    epsilon: Fraction

    @classmethod
    def make(cls, dim: int, center: Sequence[Number], radius: Number, epsilon: Number) -> ShellQuery:
        return cls(dim, tuple(Fraction(c) for c in center), Fraction(radius), Fraction(epsilon))

    def __post_init__(self):
        _check_dim(self.dim)
        if len(self.center) != self.dim:
            raise ValidationError(f"center {self.center} is not a point of R^{self.dim}")
        if not 0 < self.epsilon < Fraction(1, 2):
            raise ValidationError(f"epsilon={float(self.epsilon)} is not in (0, 1/2)")
        if not self.radius > self.epsilon:
            raise ValidationError(f"radius {float(self.radius)} must exceed epsilon {float(self.epsilon)}")
        _check_budget(self.dim, self.radius + self.epsilon)


def _check_budget(dim: int, radius: Fraction):
    if radius > RADIUS_BUDGET[dim]:
        raise BudgetExceeded(f"radius {float(radius)} exceeds the exact-enumeration budget for n={dim}")


def _scaled_center(center: Sequence[Fraction]) -> Tuple[int, Tuple[int, ...]]:
    '''Common denominator D and the integer vector D * center.'''
    denominator = 1
    for c in center:
        denominator = denominator * c.denominator // math.gcd(denominator, c.denominator)
    return denominator, tuple(int(c * denominator) for c in center)


def _count_residue(X: int, D: int, lo: int, hi: int) -> int:
    '''#{m : lo <= D m - X <= hi}.'''
    if lo > hi:
        return 0
    return max(0, (hi + X) // D + (-(lo + X)) // D + 1)


def _count_last(X: int, D: int, lo: int, hi: int) -> int:
    '''#{m : lo <= (D m - X)^2 <= hi}.'''
    if hi < 0 or hi < lo:
        return 0
    b = math.isqrt(hi)
    a = math.isqrt(lo - 1) + 1 if lo > 0 else 0
    if a > b:
        return 0
    count = _count_residue(X, D, a, b) + _count_residue(X, D, -b, -a)
    if a == 0:
        count -= _count_residue(X, D, 0, 0)
    return count


def _count_annulus(dim: int, center: Sequence[Fraction], lo: Fraction, hi: Fraction) -> int:
    '''#{m in Z^dim : lo <= ||m - center||^2 <= hi}, exactly.'''
    D, X = _scaled_center(center)
    # sums of squares of D m - X are integers, so the rational bounds round inward
    LO, HI = math.ceil(lo * D * D), math.floor(hi * D * D)
    if HI < 0 or HI < LO:
        return 0
    return _sum_slices(X, D, LO, HI, 0)


def _sum_slices(X: Tuple[int, ...], D: int, LO: int, HI: int, used: int) -> int:
    if len(X) == 1:
        return _count_last(X[0], D, LO - used, HI - used)
    reach = math.isqrt(HI - used)
    first, last = -((reach - X[0]) // D), (X[0] + reach) // D
    total = 0
    for m in range(first, last + 1):
        u = D * m - X[0]
        total += _sum_slices(X[1:], D, LO, HI, used + u * u)
    return total


def count_shell(q: ShellQuery) -> int:
    return _count_annulus(q.dim, q.center, (q.radius - q.epsilon) ** 2, (q.radius + q.epsilon) ** 2)


def count_ball(n: int, x: Sequence[Number], r: Number) -> int:
    _check_dim(n)
    center, r = tuple(Fraction(c) for c in x), Fraction(r)
    if len(center) != n or r < 0:
        raise ValidationError(f"bad ball query: center {x}, radius {r}")
    _check_budget(n, r)
    return _count_annulus(n, center, Fraction(0), r * r)


def count_sphere(n: int, x: Sequence[Number], r: Number) -> int:
    '''Integer points at distance exactly r.'''
    _check_dim(n)
    center, r = tuple(Fraction(c) for c in x), Fraction(r)
    if len(center) != n or r < 0:
        raise ValidationError(f"bad sphere query: center {x}, radius {r}")
    _check_budget(n, r)
    return _count_annulus(n, center, r * r, r * r)


@dataclass(frozen=True)
class ShellCount:
    count: int
    ambiguous: int


def shell_report(q: ShellQuery, guard: Fraction = GUARD_BAND) -> ShellCount:
    '''
    The exact count plus the number of points lying within `guard` of either
    shell boundary, whose membership a perturbation of the inputs at that
    scale could flip.
    '''
    wide = _count_annulus(q.dim, q.center, max(q.radius - q.epsilon - guard, Fraction(0)) ** 2,
                          (q.radius + q.epsilon + guard) ** 2)
    narrow = _count_annulus(q.dim, q.center, (q.radius - q.epsilon + guard) ** 2,
                            (q.radius + q.epsilon - guard) ** 2)
    return ShellCount(count_shell(q), wide - narrow)


def shell_asymptotic(q: ShellQuery) -> float:
    _check_dim(q.dim)
    return 2 * float(q.epsilon) * float(q.radius) ** (q.dim - 1) * SURFACE[q.dim]


@dataclass(frozen=True)
class TrendRow:
    radius: float
    epsilon: float
    count: int
    asymptotic: float
    ratio: float
    tail_deviation: float
    ambiguous: int = 0


def convergence_trend(radii: Sequence[Number], epsilon: Number, dim: int = 2,
                      center: Sequence[Number] = ()) -> List[TrendRow]:
    '''
    Count / asymptotic per radius; tail_deviation is max |ratio - 1| over this
    and all larger radii; ambiguous counts the points within the guard band of
    either boundary.
    '''
    center = tuple(center) or (0,) * dim
    rows = []
    for r in sorted(Fraction(r) for r in radii):
        q = ShellQuery.make(dim, center, r, epsilon)
        report = shell_report(q)
        asymptotic = shell_asymptotic(q)
        rows.append([float(r), float(q.epsilon), report.count, asymptotic,
                     report.count / asymptotic, report.ambiguous])
    deviations = np.abs(np.array([row[4] for row in rows]) - 1)
    tails = np.maximum.accumulate(deviations[::-1])[::-1]
    return [TrendRow(*row[:5], float(tail), row[5]) for row, tail in zip(rows, tails)]
