from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .covariance import CovarianceSeries, EstimatorSpec, QuadSpec, cov_series, spectral_cov_transvection
from .exceptions import FullyDecayed, ValidationError
from .flows import TorusGeodesic
from .observables import FourierObservable, norm_H_s0

logger = logging.getLogger(__name__)

DECAYED_BELOW = 1e-14
MIN_POINTS = 10


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    amplitude: float
    r2: float
    window: Tuple[float, float]
    method: str = "log-log least squares on block envelope"
    block: int = 10

    def comment(self) -> str:
        return f"fit: exponent={self.exponent:.17g}, amplitude={self.amplitude:.17g}, r2={self.r2:.17g}"


def envelope(times: np.ndarray, values: np.ndarray, block: int) -> Tuple[np.ndarray, np.ndarray]:
    '''Per block of consecutive samples: max |value| and the time where it is reached.'''
    if block < 1:
        raise ValidationError(f"block must be >= 1, got {block}")
    magnitudes = np.abs(values)
    env_t, env_v = [], []
    for start in range(0, len(times), block):
        chunk = magnitudes[start:start + block]
        peak = int(np.argmax(chunk))
        env_t.append(times[start + peak])
        env_v.append(chunk[peak])
    return np.asarray(env_t, dtype=float), np.asarray(env_v, dtype=float)


def _windowed(series: CovarianceSeries, window: Optional[Tuple[float, float]]):
    times = np.asarray(series.times, dtype=float)
    values = np.asarray(series.values)
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    if len(times) < MIN_POINTS:
        raise ValidationError(f"a decay fit needs at least {MIN_POINTS} points, got {len(times)}")
    return times, values


def _linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0 else min(max(1 - residual / total, 0.0), 1.0)
    return float(slope), float(intercept), r2


def _envelope_points(series, window, block):
    times, values = _windowed(series, window)
    env_t, env_v = envelope(times, values, block)
    if np.all(env_v < DECAYED_BELOW):
        raise FullyDecayed(f"every envelope value of {series.flow_id} is below {DECAYED_BELOW}")
    keep = env_v > 0
    if keep.sum() < 2:
        raise ValidationError("fewer than two nonzero envelope points to fit")
    return times, env_t[keep], env_v[keep]


def fit_power_law(series: CovarianceSeries, window: Optional[Tuple[float, float]] = None,
                  block: int = 10) -> DecayFit:
    '''log(env) = log A - p log t on the block envelope.'''
    times, env_t, env_v = _envelope_points(series, window, block)
    if np.any(env_t <= 0):
        raise ValidationError("a power-law fit needs positive times")
    slope, intercept, r2 = _linear_fit(np.log(env_t), np.log(env_v))
    return DecayFit(-slope, float(np.exp(intercept)), r2, (float(times[0]), float(times[-1])), block=block)


def fit_exponential(series: CovarianceSeries, window: Optional[Tuple[float, float]] = None,
                    block: int = 1) -> DecayFit:
    '''log(env) = log C - c t on the block envelope; `exponent` holds the rate c.'''
    times, env_t, env_v = _envelope_points(series, window, block)
    slope, intercept, r2 = _linear_fit(env_t, np.log(env_v))
    return DecayFit(-slope, float(np.exp(intercept)), r2, (float(times[0]), float(times[-1])),
                    method="log-linear least squares on block envelope", block=block)


FITS = {"power": fit_power_law, "exponential": fit_exponential}


@dataclass(frozen=True)
class BoundRow:
    n: int
    abs_cov: float
    bound: float
    sharp_bound: float
    ok: bool
    sharp_ok: bool


def sharp_shear_factor(n: int) -> float:
    '''
    min over real r of (1 + r²)(1 + (r + n)²): the smallest value of
    (h(η) h(A η))² over η with η₂ != 0, where r = η₁/η₂.
    '''
    quartic = np.polymul([1.0, 0.0, 1.0], [1.0, 2.0 * n, n * n + 1.0])
    critical = np.roots(np.polyder(quartic))
    real = critical[np.abs(critical.imag) < 1e-9].real
    return float(np.min(np.polyval(quartic, real)))


def check_transvection_bound(f1: FourierObservable, f2: FourierObservable, s: float,
                             n_range: Sequence[int]) -> List[BoundRow]:
    norms = norm_H_s0(f1, s) * norm_H_s0(f2, s)
    rows = []
    for n in n_range:
        if n < 1:
            raise ValidationError(f"n must be >= 1, got {n}")
        value = abs(spectral_cov_transvection(f1, f2, n))
        bound = 4 ** s * float(n) ** (-2 * s) * norms
        sharp = sharp_shear_factor(n) ** (-s / 2) * norms
        rows.append(BoundRow(
            n, value, bound, sharp,
            ok=value <= bound * (1 + 1e-12),
            sharp_ok=value <= sharp * (1 + 1e-12),
        ))
    return rows


def check_geodesic_rate(n_dim: int, f1: FourierObservable, f2: FourierObservable,
                        t_window: Tuple[float, float] = (10.0, 1000.0), points: int = 100,
                        block: int = 10, quadrature: Optional[QuadSpec] = None,
                        threads: int = 1) -> DecayFit:
    flow = TorusGeodesic(n_dim)
    times = np.geomspace(t_window[0], t_window[1], points)
    estimator = EstimatorSpec(quadrature=quadrature or QuadSpec(), threads=threads)
    series = cov_series(flow, f1, f2, times, estimator)
    fit = fit_power_law(series, block=block)
    logger.info("geodesic rate n=%d: exponent %.4f (expected %.1f), r2 %.4f",
                n_dim, fit.exponent, (n_dim - 1) / 2, fit.r2)
    return fit
