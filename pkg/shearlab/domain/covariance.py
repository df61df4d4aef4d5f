from __future__ import annotations
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import flows
from .exceptions import ConvergenceError, ValidationError
from .flows import CompatibleFlow, FlowSpec, Transvection
from .observables import FourierObservable, conditional_expectation

logger = logging.getLogger(__name__)

SPECTRAL = "spectral"
MONTECARLO = "montecarlo"


class QuadratureNotConverged(ConvergenceError):
    pass


class NotPureObservable(ValidationError):
    pass


class EstimatorUnavailable(ValidationError):
    pass


@dataclass(frozen=True)
class QuadSpec:
    '''
    Base resolution per chart axis (trapezoid nodes on periodic axes,
    Gauss-Legendre panels elsewhere), raised with the phase bandwidth of the
    integrand; the result is accepted when doubling every axis moves it by
    less than `tolerance` relative to max(|value|, integrand mass).

    The mass ∫|w a1 a2| is the scale of the rounding and truncation error of
    an oscillatory sum. Scaling by |value| alone would reject every t where
    the covariance passes through zero, e.g. the zeros of J0 on the circle.
    '''
    periodic_nodes: int = 16
    panels: int = 4
    tolerance: float = 1e-6
    max_points: int = 1 << 24
    chunk: int = 1 << 18
    bandwidth_grid: int = 64


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str = SPECTRAL
    samples: int = 10_000
    seed: int = 0
    quadrature: QuadSpec = field(default_factory=QuadSpec)
    threads: int = 1
    common_random_numbers: bool = False

    def __post_init__(self):
        if self.kind not in (SPECTRAL, MONTECARLO):
            raise ValidationError(f"unknown estimator {self.kind!r}")
        if self.kind == MONTECARLO and self.samples < 100:
            raise ValidationError(f"Monte Carlo needs at least 100 samples, got {self.samples}")
        if self.threads < 0:
            raise ValidationError(f"threads must be >= 0, got {self.threads}")


@dataclass(frozen=True, eq=False)
class CovarianceSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    estimator: str
    flow_id: str
    observables: Tuple[str, str]

    def __post_init__(self):
        if not len(self.times) == len(self.values) == len(self.stderr):
            raise ValidationError("times, values and stderr differ in length")
        if np.any(self.stderr < 0):
            raise ValidationError("negative standard error")
        if self.estimator == SPECTRAL and np.any(self.stderr != 0):
            raise ValidationError("spectral values are exact, their stderr must be 0")

    def __len__(self):
        return len(self.times)


def _pure(obs: FourierObservable):
    if not obs.is_pure:
        raise NotPureObservable(f"{obs.name} is not a pure observable on the 2-torus")
    return obs.coefficients()


def spectral_cov_transvection(f1: FourierObservable, f2: FourierObservable, n: int,
                              variant: str = "lower") -> complex:
    '''
    Σ conj(ĉ1(A η)) ĉ2(η) over the non-invariant η in the support of f2, with
    A the transpose of the n-th matrix power.
    '''
    c1, c2 = _pure(f1), _pure(f2)
    n = int(n)
    total = 0j
    for (e1, e2), c in c2.items():
        if variant == "lower":
            if e2 == 0:
                continue
            image = (e1 + n * e2, e2)
        else:
            if e1 == 0:
                continue
            image = (e1, e2 + n * e1)
        if image in c1:
            total += np.conj(c1[image]) * c
    return complex(total)


def _bandwidth(flow: CompatibleFlow, xi: Sequence[int], t: float, grid: int) -> np.ndarray:
    '''2π|t| sup |∂_k <ξ, v>| per chart axis, from a coarse grid.'''
    chart = flow.chart
    points = chart.cell_centers(grid if chart.n <= 2 else 16)
    gradient = np.einsum("d,Ndn->Nn", np.asarray(xi, dtype=float), flow.velocity.jacobian(points))
    return 2 * np.pi * abs(t) * np.abs(gradient).max(axis=0)


def _sizes(flow: CompatibleFlow, bandwidth: np.ndarray, quad: QuadSpec, scale: int) -> List[int]:
    sizes = []
    for k, width in enumerate(flow.chart.widths):
        if flow.chart.periodic[k]:
            sizes.append(scale * (quad.periodic_nodes + math.ceil(bandwidth[k] * width / np.pi)))
        else:
            sizes.append(scale * (quad.panels + math.ceil(bandwidth[k] * width / np.pi)))
    return sizes


def _mode_integral(flow: CompatibleFlow, xi, a1, a2, t, sizes, quad: QuadSpec) -> Tuple[complex, float]:
    count = int(np.prod([s if p else s * flows.GL_ORDER for s, p in zip(sizes, flow.chart.periodic)]))
    if count > quad.max_points:
        raise QuadratureNotConverged(
            f"mode {xi} at t={t} needs {count} quadrature points, the cap is {quad.max_points}"
        )
    points, weights = flow.base_rule(sizes)
    xi = np.asarray(xi, dtype=float)
    value, mass = 0j, 0.0
    for start in range(0, len(weights), quad.chunk):
        x, w = points[start:start + quad.chunk], weights[start:start + quad.chunk]
        amplitude = np.conj(a1(x)) * a2(x)
        phase = np.exp(2j * np.pi * t * (flow.velocity(x) @ xi))
        value += np.sum(w * amplitude * phase)
        mass += float(np.sum(np.abs(w * amplitude)))
    return complex(value), mass


def quadrature_cov(flow: CompatibleFlow, f1: FourierObservable, f2: FourierObservable, t: float,
                   quadrature: Optional[QuadSpec] = None) -> Tuple[complex, float]:
    '''Spectral covariance of a compatible flow and its N vs 2N refinement error.'''
    if not isinstance(flow, CompatibleFlow):
        raise EstimatorUnavailable(f"no spectral formula for {flow.flow_id}")
    quad = quadrature or QuadSpec()
    flow.check_time(t)
    for obs in (f1, f2):
        if (obs.n, obs.d) != (flow.n, flow.d):
            raise flows.DimensionMismatch(f"{obs.name} does not live on the phase space of {flow.flow_id}")
    terms1, terms2 = f1.terms, f2.terms
    total, error = 0j, 0.0
    for xi in terms1.keys() & terms2.keys():
        if flow.is_invariant_mode(xi):
            continue
        a1, a2 = terms1[xi], terms2[xi]
        mode = flow.polar_mode(xi) if a1.is_constant and a2.is_constant else xi
        bandwidth = _bandwidth(flow, mode, t, quad.bandwidth_grid)
        coarse, _ = _mode_integral(flow, mode, a1, a2, t, _sizes(flow, bandwidth, quad, 1), quad)
        fine, mass = _mode_integral(flow, mode, a1, a2, t, _sizes(flow, bandwidth, quad, 2), quad)
        difference = abs(fine - coarse)
        logger.debug("mode %s t=%s: refinement difference %.3g, mass %.3g", xi, t, difference, mass)
        if difference > quad.tolerance * max(abs(fine), mass):
            raise QuadratureNotConverged(
                f"mode {xi} at t={t}: N and 2N quadratures differ by {difference:.3g}"
            )
        total += fine
        error += difference
    return complex(total), error


def spectral_cov_product_flow(flow: CompatibleFlow, f1: FourierObservable, f2: FourierObservable,
                              t: float, quadrature: Optional[QuadSpec] = None) -> complex:
    return quadrature_cov(flow, f1, f2, t, quadrature)[0]


def invariant_part(flow: FlowSpec, f1: FourierObservable, f2: FourierObservable) -> complex:
    '''E(conj(E(f1|I)) E(f2|I)), by quadrature over the base marginal.'''
    g1 = conditional_expectation(f1, flow).terms
    g2 = conditional_expectation(f2, flow).terms
    common = g1.keys() & g2.keys()
    if not common:
        return 0j
    points, weights = flow.base_rule()
    return complex(sum(np.sum(weights * np.conj(g1[xi](points)) * g2[xi](points)) for xi in common))


def mc_cov(flow: FlowSpec, f1: FourierObservable, f2: FourierObservable, t: float,
           samples: int, seed: int, stream: Sequence[int] = ()) -> Tuple[complex, float]:
    if samples < 100:
        raise ValidationError(f"Monte Carlo needs at least 100 samples, got {samples}")
    cloud = flows.sample_invariant(flow, samples, seed, *stream)
    moved = flow.advance(cloud, t)
    products = np.conj(f1.evaluate(cloud)) * f2.evaluate(moved)
    stderr = math.sqrt(np.var(products.real, ddof=1) + np.var(products.imag, ddof=1)) / math.sqrt(samples)
    return complex(products.mean() - invariant_part(flow, f1, f2)), stderr


def _estimator(flow: FlowSpec, f1, f2, spec: EstimatorSpec) -> Callable[[int, float], Tuple[complex, float]]:
    if spec.kind == MONTECARLO:
        def estimate(index, t):
            stream = () if spec.common_random_numbers else (index,)
            return mc_cov(flow, f1, f2, t, spec.samples, spec.seed, stream)
        return estimate
    if isinstance(flow, Transvection):
        def estimate(index, t):
            flow.check_time(t)
            return spectral_cov_transvection(f1, f2, int(t), flow.variant), 0.0
        return estimate
    if isinstance(flow, CompatibleFlow):
        def estimate(index, t):
            return quadrature_cov(flow, f1, f2, t, spec.quadrature)[0], 0.0
        return estimate
    raise EstimatorUnavailable(f"{flow.flow_id} supports the Monte Carlo estimator only")


def resolve_threads(threads: int) -> int:
    return threads or os.cpu_count() or 1


def cov_series(flow: FlowSpec, f1: FourierObservable, f2: FourierObservable,
               times: Sequence[float], estimator: Optional[EstimatorSpec] = None) -> CovarianceSeries:
    spec = estimator or EstimatorSpec()
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValidationError("times must be a non-empty list")
    if np.any(np.diff(times) < 0):
        raise ValidationError("times must be sorted ascending")
    estimate = _estimator(flow, f1, f2, spec)
    workers = resolve_threads(spec.threads)
    logger.debug("covariance series for %s over %d times on %d threads", flow.flow_id, len(times), workers)
    if workers == 1:
        results = [estimate(i, t) for i, t in enumerate(times)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(estimate, range(len(times)), times))
    return CovarianceSeries(
        times=times,
        values=np.array([value for value, _ in results], dtype=complex),
        stderr=np.array([err for _, err in results], dtype=float),
        estimator=spec.kind,
        flow_id=flow.flow_id,
        observables=(f1.name, f2.name),
    )
