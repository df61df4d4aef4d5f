from __future__ import annotations
import cmath
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from . import flows
from .covariance import MONTECARLO, CovarianceSeries, mc_cov
from .exceptions import ValidationError
from .flows import PAdicTranslation, SphereGeodesic
from .observables import FourierObservable
from .padic import PAdicInteger, PrimeMismatch, padic_add

logger = logging.getLogger(__name__)

PERIOD_TOLERANCE = 1e-9


class PreconditionViolated(ValidationError):
    pass


@dataclass(frozen=True)
class PAdicCharacterObservable:
    '''f(y) = exp(2πi j y_N / p): reads digit N of y only.'''
    p: int
    level: int
    character: int = 1

    def __post_init__(self):
        if self.level < 0:
            raise ValidationError(f"level must be >= 0, got {self.level}")
        if not 1 <= self.character <= self.p - 1:
            raise ValidationError(f"character index {self.character} is not in [1, {self.p - 1}]")

    def of_digit(self, m) -> np.ndarray:
        # reduce the exponent in integers so equal digits give bit-identical values
        return np.exp(2j * np.pi * ((self.character * np.asarray(m)) % self.p) / self.p)

    def __call__(self, y: PAdicInteger) -> complex:
        if y.p != self.p:
            raise PrimeMismatch(f"observable over Z_{self.p} applied to Z_{y.p}")
        return complex(self.of_digit(y.digits[self.level]))


def padic_orbit_values(p: int, K: int, v: PAdicInteger, obs: PAdicCharacterObservable,
                       y0: PAdicInteger, n_max: int) -> List[complex]:
    '''
    f(y0 + n v) for n = 0..n_max by repeated addition, checked digit by digit
    against the closed form χ(y0_N + n k).
    '''
    for value in (v, y0):
        if value.p != p or value.K != K:
            raise PrimeMismatch(f"expected Z_{p} truncated to {K} digits, got Z_{value.p}/{value.K}")
    level = obs.level
    if obs.p != p or not level < K:
        raise PreconditionViolated(f"the observable reads digit {level} of Z_{obs.p}, the orbit has {K} in Z_{p}")
    if any(v.digits[:level]):
        raise PreconditionViolated(f"v has nonzero digits below level {level}")
    k = v.digits[level]
    if k == 0:
        raise PreconditionViolated(f"digit {level} of v is zero")
    values = []
    y = y0
    for n in range(n_max + 1):
        expected = (y0.digits[level] + n * k) % p
        if y.digits[level] != expected:
            raise AssertionError(f"digit {level} of y0 + {n}v is {y.digits[level]}, expected {expected}")
        values.append(obs(y))
        y = padic_add(y, v)
    return values


def invariant_fraction(flow: PAdicTranslation, level: int) -> float:
    '''
    Share of atoms whose shift leaves digit `level` fixed, i.e. whose
    valuation exceeds it. On those atoms the character is invariant, on the
    others its conditional expectation vanishes.
    '''
    fixed = [PAdicInteger.from_int(v, flow.p, flow.K).valuation() > level for v in flow.shifts]
    return sum(fixed) / len(fixed)


def padic_covariance_series(flow: PAdicTranslation, obs: PAdicCharacterObservable, times: Sequence[int],
                            samples: int, seed: int) -> CovarianceSeries:
    if obs.p != flow.p or obs.level >= flow.K:
        raise PreconditionViolated(f"observable on digit {obs.level} of Z_{obs.p} does not fit the flow")
    cloud = flows.sample_invariant(flow, samples, seed)
    start = obs.of_digit(cloud.digits[:, obs.level])
    offset = invariant_fraction(flow, obs.level)
    values, stderr = [], []
    for t in times:
        moved = flow.advance(cloud, t)
        products = np.conj(start) * obs.of_digit(moved.digits[:, obs.level])
        values.append(products.mean() - offset)
        stderr.append(np.sqrt((np.var(products.real, ddof=1) + np.var(products.imag, ddof=1)) / samples))
    return CovarianceSeries(
        times=np.asarray(times, dtype=float),
        values=np.asarray(values, dtype=complex),
        stderr=np.asarray(stderr, dtype=float),
        estimator=MONTECARLO,
        flow_id=flow.flow_id,
        observables=(f"chi{obs.character}@{obs.level}",) * 2,
    )


@dataclass(frozen=True)
class SphereCertificate:
    t0: float
    cov_t0: complex
    cov_shifted: complex
    stderr: float
    difference: float

    @property
    def holds(self) -> bool:
        return self.difference < PERIOD_TOLERANCE


def sphere_no_decay_certificate(f1: FourierObservable, f2: FourierObservable, t0: float,
                                samples: int, seed: int) -> SphereCertificate:
    if t0 < 0:
        raise ValidationError(f"t0 must be >= 0, got {t0}")
    flow = SphereGeodesic()
    first, stderr = mc_cov(flow, f1, f2, t0, samples, seed)
    shifted, _ = mc_cov(flow, f1, f2, t0 + 2 * cmath.pi, samples, seed)
    certificate = SphereCertificate(t0, first, shifted, stderr, abs(shifted - first))
    if not certificate.holds:
        logger.warning("sphere periodicity off by %.3g at t0=%s", certificate.difference, t0)
    return certificate
