# pylint: disable=too-few-public-methods
from __future__ import annotations
import abc
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import padic
from .exceptions import ConvergenceError, ValidationError

logger = logging.getLogger(__name__)

GL_ORDER = 8
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)
NORMALIZATION_TOLERANCE = 1e-6


class DimensionMismatch(ValidationError):
    pass


class InvalidTime(ValidationError):
    pass


class InvalidAngle(ValidationError):
    pass


class UnnormalizableDensity(ValidationError):
    pass


class UnknownRegistryId(ValidationError):
    pass


class OrbitPrecisionExhausted(ConvergenceError):
    pass


def wrap(y: np.ndarray) -> np.ndarray:
    y = np.mod(y, 1.0)
    # np.mod rounds tiny negatives up to exactly 1.0
    return np.where(y >= 1.0, 0.0, y)


def torus_distance(a, b) -> float:
    diff = np.abs(np.mod(np.asarray(a, float) - np.asarray(b, float) + 0.5, 1.0) - 0.5)
    return float(diff.max()) if diff.size else 0.0


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


@dataclass(frozen=True)
class Chart:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    periodic: Tuple[bool, ...] = ()

    def __post_init__(self):
        lower = tuple(float(a) for a in self.lower)
        upper = tuple(float(b) for b in self.upper)
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * len(lower)
        if not len(lower) == len(upper) == len(periodic):
            raise DimensionMismatch("chart bounds and periodic flags differ in length")
        if any(b <= a for a, b in zip(lower, upper)):
            raise ValidationError(f"empty chart {lower} -> {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "periodic", periodic)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lower) & (x <= self.upper), axis=1)

    def cell_centers(self, grid: int) -> np.ndarray:
        axes = [
            lo + (np.arange(grid) + 0.5) * (hi - lo) / grid
            for lo, hi in zip(self.lower, self.upper)
        ]
        return _tensor_points(axes)

    def rule(self, sizes: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        '''
        Tensor quadrature for Lebesgue measure on the chart. On periodic axes
        `size` is the number of trapezoid nodes, elsewhere it is the number of
        Gauss-Legendre panels.
        '''
        if self.n == 0:
            return np.zeros((1, 0)), np.ones(1)
        rules = [self._axis_rule(k, int(size)) for k, size in enumerate(sizes)]
        points = _tensor_points([nodes for nodes, _ in rules])
        weights = reduce(np.multiply.outer, [w for _, w in rules]).ravel()
        return points, weights

    def _axis_rule(self, k: int, size: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.lower[k], self.upper[k]
        if self.periodic[k]:
            return lo + (hi - lo) * np.arange(size) / size, np.full(size, (hi - lo) / size)
        edges = np.linspace(lo, hi, size + 1)
        half = np.diff(edges)[:, None] / 2
        nodes = (edges[:-1, None] + half) + half * GL_NODES[None, :]
        return nodes.ravel(), (half * GL_WEIGHTS[None, :]).ravel()


def _tensor_points(axes: Sequence[np.ndarray]) -> np.ndarray:
    if not axes:
        return np.zeros((1, 0))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


class BaseDensity(abc.ABC):
    density_id = "abstract"

    @abc.abstractmethod
    def pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    '''
    Rejection sampling against a flat envelope is the fallback; densities
    with a closed-form inverse CDF override it.
    '''
    def sample(self, chart: Chart, count: int, rng: np.random.Generator) -> np.ndarray:
        coarse = chart.cell_centers(64 if chart.n <= 2 else 16)
        peak = 1.05 * float(self.pdf(coarse).max())
        accepted = []
        total = 0
        while total < count:
            batch = max(2 * (count - total), 1024)
            proposals = chart.lower + chart.widths * rng.random((batch, chart.n))
            keep = rng.random(batch) * peak <= self.pdf(proposals)
            accepted.append(proposals[keep])
            total += int(keep.sum())
        return np.concatenate(accepted)[:count]


class UniformDensity(BaseDensity):
    density_id = "uniform"

    def __init__(self, chart: Chart):
        self.chart = chart

    def pdf(self, x):
        return np.full(np.atleast_2d(x).shape[0], 1.0 / self.chart.volume)

    def sample(self, chart, count, rng):
        return chart.lower + chart.widths * rng.random((count, chart.n))


class HalfCosineDensity(BaseDensity):
    density_id = "half-cosine"

    def __init__(self, chart: Chart):
        self.chart = chart

    def pdf(self, x):
        return np.cos(np.atleast_2d(x)[:, 0]) / 2

    def sample(self, chart, count, rng):
        # the CDF of cos(θ)/2 on (-π/2, π/2) is (1 + sin θ)/2
        return np.arcsin(2 * rng.random((count, 1)) - 1)


class SphereAreaDensity(BaseDensity):
    density_id = "sphere-area"

    def __init__(self, chart: Chart):
        self.chart = chart

    def pdf(self, x):
        return np.sin(np.atleast_2d(x)[:, 0]) / (4 * np.pi)

    def sample(self, chart, count, rng):
        u = rng.random((count, 2))
        return np.stack([np.arccos(1 - 2 * u[:, 0]), 2 * np.pi * u[:, 1]], axis=-1)


class ReweightedDensity(BaseDensity):
    '''
    inner(x) * (1 + amplitude * cos(2π k (x1 - lower1) / width1)), renormalized.
    Strictly positive and smooth whenever |amplitude| < 1.
    '''
    density_id = "reweighted"

    def __init__(self, inner: BaseDensity, chart: Chart, amplitude: float, frequency: int = 1):
        if not abs(amplitude) < 1:
            raise UnnormalizableDensity(f"reweighting amplitude {amplitude} is not < 1")
        self.inner = inner
        self.chart = chart
        self.amplitude = amplitude
        self.frequency = frequency
        points, weights = chart.rule([256] * chart.n)
        self.normalizer = float(weights @ (inner.pdf(points) * self._weight(points)))

    def _weight(self, x):
        phase = (np.atleast_2d(x)[:, 0] - self.chart.lower[0]) / self.chart.widths[0]
        return 1 + self.amplitude * np.cos(2 * np.pi * self.frequency * phase)

    def pdf(self, x):
        return self.inner.pdf(x) * self._weight(x) / self.normalizer


DENSITIES = {
    "uniform": UniformDensity,
    "half-cosine": HalfCosineDensity,
    "sphere-area": SphereAreaDensity,
}  # type: Dict[str, Callable[[Chart], BaseDensity]]


def make_density(density_id: str, chart: Chart, reweight: float = 0.0) -> BaseDensity:
    try:
        density = DENSITIES[density_id](chart)
    except KeyError:
        raise UnknownRegistryId(f"unknown base density {density_id!r}") from None
    if reweight:
        density = ReweightedDensity(density, chart, reweight)
    return density


def check_normalized(density: BaseDensity, chart: Chart):
    if chart.n == 0:
        return
    points, weights = chart.rule([256 if periodic else 64 for periodic in chart.periodic])
    values = density.pdf(points)
    if np.any(values < 0):
        raise UnnormalizableDensity(f"{density.density_id} density is negative on the chart")
    mass = float(weights @ values)
    if abs(mass - 1) > NORMALIZATION_TOLERANCE:
        raise UnnormalizableDensity(f"{density.density_id} density integrates to {mass}")


def _constant(chart, value):
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return len(value), lambda x: np.broadcast_to(value, (x.shape[0], len(value))).copy()


def _linear(chart, matrix, offset=None):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != chart.n:
        raise DimensionMismatch(f"linear velocity needs {chart.n} columns, got {matrix.shape[1]}")
    offset = np.zeros(matrix.shape[0]) if offset is None else np.asarray(offset, dtype=float)
    return matrix.shape[0], lambda x: x @ matrix.T + offset


def _polynomial(chart, coefficients):
    coefficients = np.asarray(coefficients, dtype=float)
    return 1, lambda x: np.polynomial.polynomial.polyval(x[:, :1], coefficients)


def _kepler(chart, exponent=-1.5):
    if chart.lower[0] <= 0:
        raise ValidationError("the Kepler velocity needs a chart of positive radii")
    return 1, lambda x: x[:, :1] ** exponent


def _circle_direction(chart):
    return 2, lambda x: np.stack([np.cos(x[:, 0]), np.sin(x[:, 0])], axis=-1)


def _sphere_direction(chart):
    def direction(x):
        colat, lon = x[:, 0], x[:, 1]
        return np.stack(
            [np.sin(colat) * np.cos(lon), np.sin(colat) * np.sin(lon), np.cos(colat)],
            axis=-1,
        )
    return 3, direction


def _billiard(chart):
    def velocity(x):
        theta = x[:, 0]
        return np.stack(
            [2 * np.cos(theta), 2 * np.cos(theta) * (0.5 - theta / np.pi)], axis=-1
        )
    return 2, velocity


VELOCITIES = {
    "constant": _constant,
    "linear": _linear,
    "polynomial": _polynomial,
    "kepler": _kepler,
    "circle-direction": _circle_direction,
    "sphere-direction": _sphere_direction,
    "billiard": _billiard,
}


class VelocityField:
    def __init__(self, kind: str, chart: Chart, d: int, func: Callable, params: Optional[dict] = None):
        self.kind = kind
        self.chart = chart
        self.d = d
        self._func = func
        self.params = params or {}

    def __repr__(self):
        return f"<VelocityField {self.kind} {self.chart.n}->{self.d}>"

    @property
    def n(self) -> int:
        return self.chart.n

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        return np.asarray(self._func(x), dtype=float).reshape(x.shape[0], self.d)

    def jacobian(self, x: np.ndarray, steps: Optional[np.ndarray] = None) -> np.ndarray:
        '''Central differences, shape (N, d, n).'''
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        if steps is None:
            steps = self.chart.widths / 2048
        columns = []
        for k in range(self.n):
            shift = np.zeros(self.n)
            shift[k] = steps[k]
            columns.append((self(x + shift) - self(x - shift)) / (2 * steps[k]))
        return np.stack(columns, axis=-1)

    def perturbed(self, amount: float, direction: Sequence[float], bump: Optional[Callable] = None) -> VelocityField:
        '''v + amount * x1 * bump(x) * direction.'''
        direction = np.asarray(direction, dtype=float)
        if direction.shape != (self.d,):
            raise DimensionMismatch(f"perturbation direction must have {self.d} entries")

        def func(x):
            weight = x[:, 0] if bump is None else x[:, 0] * bump(x)
            return self(x) + amount * weight[:, None] * direction[None, :]

        params = dict(self.params, amount=amount, direction=tuple(direction))
        return VelocityField(f"perturbed-{self.kind}", self.chart, self.d, func, params)

    @classmethod
    def from_grid(cls, chart: Chart, values: np.ndarray) -> VelocityField:
        values = np.asarray(values, dtype=float)
        axes = [np.linspace(lo, hi, m) for lo, hi, m in zip(chart.lower, chart.upper, values.shape)]
        interpolant = RegularGridInterpolator(
            axes, values, method="linear", bounds_error=False, fill_value=None
        )
        return cls("grid", chart, values.shape[chart.n], interpolant, {"shape": values.shape})


def make_velocity(kind: str, chart: Chart, **params) -> VelocityField:
    try:
        factory = VELOCITIES[kind]
    except KeyError:
        raise UnknownRegistryId(f"unknown velocity field {kind!r}") from None
    d, func = factory(chart, **params)
    return VelocityField(kind, chart, d, func, params)


def billiard_chart_velocity(theta: float) -> np.ndarray:
    if not abs(theta) < np.pi / 2:
        raise InvalidAngle(f"θ={theta} is outside (-π/2, π/2)")
    return 2 * np.cos(theta) * np.array([1.0, 0.5 - theta / np.pi])


@dataclass(frozen=True, eq=False)
class PhasePoint:
    base: np.ndarray
    fiber: np.ndarray
    digits: Optional[np.ndarray] = None

    @classmethod
    def make(cls, base: Sequence[float], fiber: Sequence[float]) -> PhasePoint:
        return cls(np.asarray(base, dtype=float).reshape(-1), wrap(np.asarray(fiber, dtype=float).reshape(-1)))


'''
A cloud is the batched form of PhasePoint: row i of every array is one point.
Samplers and the Monte Carlo estimator work on clouds; PhasePoint is a
one-row view for callers that want a single trajectory.
'''
@dataclass(frozen=True, eq=False)
class PhaseCloud:
    base: np.ndarray
    fiber: np.ndarray
    digits: Optional[np.ndarray] = None

    def __len__(self):
        return self.base.shape[0]

    def __getitem__(self, i: int) -> PhasePoint:
        digits = None if self.digits is None else self.digits[i]
        return PhasePoint(self.base[i], self.fiber[i], digits)

    def __iter__(self) -> Iterator[PhasePoint]:
        return (self[i] for i in range(len(self)))

    @classmethod
    def of(cls, points: Sequence[PhasePoint]) -> PhaseCloud:
        digits = None
        if points[0].digits is not None:
            digits = np.stack([p.digits for p in points])
        return cls(
            np.stack([np.asarray(p.base, dtype=float) for p in points]),
            np.stack([np.asarray(p.fiber, dtype=float) for p in points]),
            digits,
        )


@dataclass(frozen=True)
class BaseMapSpec:
    kind: str
    alpha: float = 0.0
    bits: int = 2048

    def __post_init__(self):
        if self.kind not in ("doubling", "rotation"):
            raise UnknownRegistryId(f"unknown base map {self.kind!r}")
        if self.kind == "rotation":
            alpha = Fraction(self.alpha)
            if alpha.limit_denominator(10 ** 6) == alpha:
                raise ValidationError(f"rotation number {self.alpha} is rational with denominator <= 1e6")
        if self.bits % 64 or self.bits < 128:
            raise ValidationError("doubling precision must be a multiple of 64 bits, at least 128")

    @property
    def words(self) -> int:
        return self.bits // 64

    def apply(self, x: float, k: int) -> float:
        if self.kind == "doubling":
            return math.ldexp(x, k) % 1.0
        return (x + k * self.alpha) % 1.0


class FlowSpec(abc.ABC):
    flow_id = "abstract"
    discrete_time = False
    semi_flow = False

    def __init__(self, chart: Chart, density: BaseDensity, d: int):
        self.chart = chart
        self.density = density
        self.d = d
        check_normalized(density, chart)

    def __repr__(self):
        return f"<{type(self).__name__} n={self.n} d={self.d}>"

    @property
    def n(self) -> int:
        return self.chart.n

    def check_cloud(self, cloud: PhaseCloud):
        if cloud.base.shape[1:] != (self.n,) or cloud.fiber.shape[1:] != (self.d,):
            raise DimensionMismatch(
                f"{self.flow_id} expects (n, d) = ({self.n}, {self.d}), "
                f"got ({cloud.base.shape[1:]}, {cloud.fiber.shape[1:]})"
            )

    def check_time(self, t: float):
        if not math.isfinite(t):
            raise InvalidTime(f"t={t} is not finite")
        if self.discrete_time and t != int(t):
            raise InvalidTime(f"{self.flow_id} is a map; t={t} is not an integer")
        if self.semi_flow and t < 0:
            raise InvalidTime(f"{self.flow_id} is a semi-flow; t={t} is negative")

    def advance(self, cloud: PhaseCloud, t: float) -> PhaseCloud:
        self.check_cloud(cloud)
        self.check_time(t)
        if t == 0:
            return cloud
        return self._advance(cloud, t)

    @abc.abstractmethod
    def _advance(self, cloud: PhaseCloud, t: float) -> PhaseCloud:
        raise NotImplementedError

    def sample(self, count: int, rng: np.random.Generator) -> PhaseCloud:
        base = self.density.sample(self.chart, count, rng)
        return PhaseCloud(base, rng.random((count, self.d)))

    def is_invariant_mode(self, xi: Tuple[int, ...]) -> bool:
        return not any(xi)

    def base_rule(self, sizes: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
        '''Quadrature for the base marginal of the invariant measure.'''
        if sizes is None:
            sizes = [256 if periodic else 64 for periodic in self.chart.periodic]
        points, weights = self.chart.rule(sizes)
        return points, weights * self.density.pdf(points)


'''
Compatible flows translate each fiber torus at a speed depending only on the
base point: g_t(x, y) = (x, y + t v(x)).
'''
class CompatibleFlow(FlowSpec):
    def __init__(self, velocity: VelocityField, density: BaseDensity):
        super().__init__(velocity.chart, density, velocity.d)
        self.velocity = velocity

    def _advance(self, cloud, t):
        return PhaseCloud(cloud.base, wrap(cloud.fiber + t * self.velocity(cloud.base)), cloud.digits)

    def polar_mode(self, xi: Tuple[int, ...]) -> Tuple[float, ...]:
        return tuple(xi)


class ProductFlow(CompatibleFlow):
    flow_id = "product"

    def __init__(self, velocity: VelocityField, density: Optional[BaseDensity] = None):
        super().__init__(velocity, density or UniformDensity(velocity.chart))


class TorusGeodesic(CompatibleFlow):
    flow_id = "torus-geodesic"

    def __init__(self, dim: int = 2):
        if dim == 2:
            chart = Chart((0.0,), (2 * np.pi,), (True,))
            velocity = make_velocity("circle-direction", chart)
            density = UniformDensity(chart)
        elif dim == 3:
            chart = Chart((0.0, 0.0), (np.pi, 2 * np.pi), (False, True))
            velocity = make_velocity("sphere-direction", chart)
            density = SphereAreaDensity(chart)
        else:
            raise ValidationError(f"torus geodesic flow is implemented for n in (2, 3), not {dim}")
        super().__init__(velocity, density)
        self.dim = dim

    def polar_mode(self, xi):
        '''
        On S² the area measure is rotation invariant, so a mode with base-constant
        profiles integrates like the one of equal length along the polar axis,
        whose phase depends on the colatitude only.
        '''
        if self.dim != 3:
            return tuple(xi)
        return (0.0, 0.0, float(np.linalg.norm(xi)))


class DiskBilliard(CompatibleFlow):
    flow_id = "disk-billiard"

    def __init__(self):
        chart = Chart((-np.pi / 2,), (np.pi / 2,))
        super().__init__(make_velocity("billiard", chart), HalfCosineDensity(chart))


class SphereGeodesic(CompatibleFlow):
    '''
    Base point: unit normal of the oriented great-circle plane, in
    (colatitude, longitude). Fiber: phase / 2π along the circle.
    '''
    flow_id = "sphere-geodesic"

    def __init__(self):
        chart = Chart((0.0, 0.0), (np.pi, 2 * np.pi), (False, True))
        velocity = make_velocity("constant", chart, value=[1 / (2 * np.pi)])
        super().__init__(velocity, SphereAreaDensity(chart))

    def _advance(self, cloud, t):
        # every geodesic closes after 2π; only the remainder moves the phase
        return super()._advance(cloud, math.fmod(t, 2 * np.pi))

    @staticmethod
    def frame(base: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        base = np.atleast_2d(base)
        normal = make_velocity("sphere-direction", Chart((0.0, 0.0), (np.pi, 2 * np.pi)))(base)
        helper = np.where(np.abs(normal[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
        e1 = np.cross(helper, normal)
        e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
        return e1, np.cross(normal, e1)

    def position(self, cloud: PhaseCloud) -> np.ndarray:
        e1, e2 = self.frame(cloud.base)
        phase = 2 * np.pi * cloud.fiber[:, :1]
        return np.cos(phase) * e1 + np.sin(phase) * e2


class Transvection(FlowSpec):
    '''
    Parabolic automorphisms of T² with an empty base: lower = rows (1,0),(1,1),
    upper = rows (1,1),(0,1).
    '''
    flow_id = "transvection"
    discrete_time = True

    def __init__(self, variant: str = "lower"):
        if variant not in ("lower", "upper"):
            raise UnknownRegistryId(f"unknown transvection variant {variant!r}")
        chart = Chart((), ())
        super().__init__(chart, UniformDensity(chart), 2)
        self.variant = variant

    def _advance(self, cloud, t):
        x, y = cloud.fiber[:, 0], cloud.fiber[:, 1]
        n = int(t)
        if self.variant == "lower":
            fiber = np.stack([x, y + n * x], axis=-1)
        else:
            fiber = np.stack([x + n * y, y], axis=-1)
        return PhaseCloud(cloud.base, wrap(fiber), cloud.digits)

    def is_invariant_mode(self, xi):
        return xi[1] == 0 if self.variant == "lower" else xi[0] == 0


class Suspension(FlowSpec):
    '''
    Fiber coordinates are (x, s): x in the base map's space A = [0,1), s the
    roof coordinate. The doubling map is carried exactly as a multiword binary
    fraction in `digits`; its last column counts the bits already consumed.
    '''
    flow_id = "suspension"
    semi_flow = True

    def __init__(self, base_map: BaseMapSpec, velocity: VelocityField, density: Optional[BaseDensity] = None):
        if velocity.d != 1:
            raise DimensionMismatch("a suspension speed is a scalar field")
        super().__init__(velocity.chart, density or UniformDensity(velocity.chart), 2)
        if float(velocity(self.chart.cell_centers(64 if self.n <= 2 else 16)).min()) <= 0:
            raise ValidationError("suspension speed must be positive on the chart")
        self.base_map = base_map
        self.velocity = velocity

    def sample(self, count, rng):
        base = self.density.sample(self.chart, count, rng)
        s = rng.random(count)
        if self.base_map.kind == "rotation":
            return PhaseCloud(base, np.stack([rng.random(count), s], axis=-1))
        words = rng.integers(0, np.iinfo(np.uint64).max, size=(count, self.base_map.words),
                             dtype=np.uint64, endpoint=True)
        digits = np.concatenate([words, np.zeros((count, 1), dtype=np.uint64)], axis=1)
        return PhaseCloud(base, np.stack([_leading_fraction(words), s], axis=-1), digits)

    def _advance(self, cloud, t):
        total = cloud.fiber[:, 1] + self.velocity(cloud.base)[:, 0] * t
        crossings = np.floor(total)
        s = wrap(total - crossings)
        k = crossings.astype(np.int64)
        if self.base_map.kind == "rotation":
            x = wrap(cloud.fiber[:, 0] + k * self.base_map.alpha)
            return PhaseCloud(cloud.base, np.stack([x, s], axis=-1), cloud.digits)
        if cloud.digits is None:
            raise DimensionMismatch("doubling suspension points carry their exact bit words")
        digits = _shift_words(cloud.digits, k, self.base_map.bits)
        x = _leading_fraction(digits[:, :-1])
        return PhaseCloud(cloud.base, np.stack([x, s], axis=-1), digits)


def _leading_fraction(words: np.ndarray) -> np.ndarray:
    return (words[:, 0] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def _shift_words(digits: np.ndarray, k: np.ndarray, bits: int) -> np.ndarray:
    words, consumed = digits[:, :-1], digits[:, -1].astype(np.int64) + k
    if np.any(consumed > bits - 64):
        raise OrbitPrecisionExhausted(
            f"doubling orbit needs {int(consumed.max())} bits, only {bits - 64} are carried"
        )
    count, width = words.shape
    padded = np.concatenate([words, np.zeros((count, width + 1), dtype=np.uint64)], axis=1)
    cols = np.minimum(np.arange(width)[None, :] + (k // 64)[:, None], 2 * width)
    high = np.take_along_axis(padded, cols, axis=1)
    low = np.take_along_axis(padded, np.minimum(cols + 1, 2 * width), axis=1)
    shift = (k % 64).astype(np.uint64)[:, None]
    carried = low >> (np.uint64(64) - np.maximum(shift, np.uint64(1)))
    shifted = (high << shift) | np.where(shift == 0, np.uint64(0), carried)
    return np.concatenate([shifted, consumed.astype(np.uint64)[:, None]], axis=1)


def suspension_evolve(base: BaseMapSpec, speed: float, state: Tuple[float, float], t: float) -> Tuple[float, float]:
    x, s = state
    if t < 0:
        raise InvalidTime(f"suspension semi-flow cannot run backwards (t={t})")
    if speed <= 0:
        raise ValidationError(f"suspension speed must be positive, got {speed}")
    if not 0 <= s < 1:
        raise ValidationError(f"roof coordinate {s} is outside [0, 1)")
    total = s + speed * t
    k = math.floor(total)
    return base.apply(x, k), total - k


class PAdicTranslation(FlowSpec):
    '''
    (x, y) -> (x, y + v(x)) on M x Z_p with M a finite set of equally likely
    atoms; v(atom) = shifts[atom]. The fiber float is (y mod p^K) / p^K, the
    exact digits ride along in `digits`.
    '''
    flow_id = "padic"
    discrete_time = True

    def __init__(self, p: int, shifts: Sequence[int], K: int = 16):
        if not padic.is_prime(p):
            raise ValidationError(f"p={p} is not a prime")
        chart = Chart((0.0,), (float(len(shifts)),))
        super().__init__(chart, UniformDensity(chart), 1)
        self.p = p
        self.K = K
        self.shifts = tuple(int(v) for v in shifts)

    def sample(self, count, rng):
        atoms = rng.integers(0, len(self.shifts), size=count)
        digits = rng.integers(0, self.p, size=(count, self.K))
        return PhaseCloud(atoms[:, None].astype(float), padic.embed(digits, self.p)[:, None], digits)

    def _advance(self, cloud, t):
        table = padic.digit_table([int(t) * v for v in self.shifts], self.p, self.K)
        steps = table[cloud.base[:, 0].astype(np.int64)]
        digits = padic.add_digit_arrays(cloud.digits, steps, self.p)
        return PhaseCloud(cloud.base, padic.embed(digits, self.p)[:, None], digits)

    def base_rule(self, sizes=None):
        atoms = np.arange(len(self.shifts), dtype=float)[:, None]
        return atoms, np.full(len(self.shifts), 1 / len(self.shifts))


def evolve(flow: FlowSpec, p: PhasePoint, t: float) -> PhasePoint:
    digits = None if p.digits is None else np.asarray(p.digits)[None, :]
    cloud = PhaseCloud(np.asarray(p.base, float)[None, :], np.asarray(p.fiber, float)[None, :], digits)
    return flow.advance(cloud, t)[0]


def evolve_cloud(flow: FlowSpec, cloud: PhaseCloud, t: float) -> PhaseCloud:
    return flow.advance(cloud, t)


def sample_invariant(flow: FlowSpec, count: int, seed: int, *stream: int) -> PhaseCloud:
    if count < 1:
        raise ValidationError(f"sample count must be >= 1, got {count}")
    return flow.sample(count, make_rng(seed, *stream))
