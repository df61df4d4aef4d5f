from __future__ import annotations
import abc
import itertools
import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import ValidationError
from .flows import (
    Chart, DimensionMismatch, FlowSpec, PhaseCloud, PhasePoint, Transvection,
    UnknownRegistryId,
)

Frequency = Tuple[int, ...]


class NonConstantProfile(ValidationError):
    pass


class ProfileOutsideChart(ValidationError):
    pass


def as_frequency(xi: Iterable[int]) -> Frequency:
    xi = tuple(xi)
    if any(int(k) != k for k in xi):
        raise ValidationError(f"frequency {xi} is not an integer vector")
    return tuple(int(k) for k in xi)


class BaseProfile(abc.ABC):
    profile_id = "abstract"
    center = None  # type: Optional[np.ndarray]

    @abc.abstractmethod
    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False


class ConstantProfile(BaseProfile):
    profile_id = "constant"

    def __init__(self, value: complex = 1.0):
        self.value = complex(value)

    def __repr__(self):
        return f"<ConstantProfile {self.value}>"

    def __call__(self, x):
        return np.full(np.atleast_2d(x).shape[0], self.value, dtype=complex)

    @property
    def is_constant(self):
        return True


class TrigProfile(BaseProfile):
    '''Σ c_k e^{i<k, x>} in chart coordinates, k integer.'''
    profile_id = "trig"

    def __init__(self, modes: Mapping[Sequence[int], complex]):
        self.modes = {as_frequency(k): complex(c) for k, c in modes.items()}

    def __call__(self, x):
        x = np.atleast_2d(x)
        out = np.zeros(x.shape[0], dtype=complex)
        for k, c in self.modes.items():
            out += c * np.exp(1j * (x @ np.asarray(k, dtype=float)))
        return out

    @property
    def is_constant(self):
        return all(not any(k) for k in self.modes)


class GaussianProfile(BaseProfile):
    profile_id = "gaussian"

    def __init__(self, center: Sequence[float], width: float, amplitude: complex = 1.0):
        if width <= 0:
            raise ValidationError(f"gaussian width must be positive, got {width}")
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.width = float(width)
        self.amplitude = complex(amplitude)

    def __call__(self, x):
        r2 = np.sum((np.atleast_2d(x) - self.center) ** 2, axis=1)
        return self.amplitude * np.exp(-r2 / (2 * self.width ** 2))


class HatProfile(BaseProfile):
    '''C¹ bump: amplitude * cos²(π|x - center| / 2 radius) inside the ball, 0 outside.'''
    profile_id = "hat"

    def __init__(self, center: Sequence[float], radius: float, amplitude: complex = 1.0):
        if radius <= 0:
            raise ValidationError(f"hat radius must be positive, got {radius}")
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        self.amplitude = complex(amplitude)

    def __call__(self, x):
        u = np.linalg.norm(np.atleast_2d(x) - self.center, axis=1) / self.radius
        return self.amplitude * np.where(u < 1, np.cos(np.pi * np.minimum(u, 1) / 2) ** 2, 0.0)


class GridProfile(BaseProfile):
    profile_id = "grid"

    def __init__(self, chart: Chart, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.ndim != chart.n:
            raise DimensionMismatch(f"grid profile needs a {chart.n}-d array")
        axes = [np.linspace(lo, hi, m) for lo, hi, m in zip(chart.lower, chart.upper, values.shape)]
        self._real = RegularGridInterpolator(axes, values.real, bounds_error=False, fill_value=None)
        self._imag = RegularGridInterpolator(axes, values.imag, bounds_error=False, fill_value=None)

    def __call__(self, x):
        x = np.atleast_2d(x)
        return self._real(x) + 1j * self._imag(x)


PROFILES = {
    "constant": ConstantProfile,
    "trig": TrigProfile,
    "gaussian": GaussianProfile,
    "hat": HatProfile,
}


def make_profile(profile_id: str, **params) -> BaseProfile:
    try:
        factory = PROFILES[profile_id]
    except KeyError:
        raise UnknownRegistryId(f"unknown base profile {profile_id!r}") from None
    return factory(**params)


class FourierObservable:
    '''
    f(x, y) = Σ_ξ a_ξ(x) e^{2πi<ξ, y>}, one term per frequency, immutable once
    built.
    '''

    def __init__(self, terms: Mapping[Sequence[int], BaseProfile], n: int, d: int, name: str = "f"):
        self._terms = {}  # type: Dict[Frequency, BaseProfile]
        for xi, profile in terms.items():
            xi = as_frequency(xi)
            if len(xi) != d:
                raise DimensionMismatch(f"frequency {xi} does not live in Z^{d}")
            if xi in self._terms:
                raise ValidationError(f"frequency {xi} appears twice")
            self._terms[xi] = profile
        self.n = n
        self.d = d
        self.name = name
        self._coefficients = None  # type: Optional[Dict[Frequency, complex]]

    def __repr__(self):
        return f"<FourierObservable {self.name} n={self.n} d={self.d} terms={len(self._terms)}>"

    @property
    def terms(self) -> Dict[Frequency, BaseProfile]:
        return dict(self._terms)

    @property
    def support(self) -> Tuple[Frequency, ...]:
        return tuple(self._terms)

    def __getitem__(self, xi: Sequence[int]) -> BaseProfile:
        return self._terms[as_frequency(xi)]

    @property
    def is_pure(self) -> bool:
        return self.d == 2 and all(profile.is_constant for profile in self._terms.values())

    def coefficients(self) -> Dict[Frequency, complex]:
        if not all(profile.is_constant for profile in self._terms.values()):
            raise NonConstantProfile(f"{self.name} has a base-dependent coefficient")
        if self._coefficients is None:
            origin = np.zeros((1, self.n))
            self._coefficients = {xi: complex(profile(origin)[0]) for xi, profile in self._terms.items()}
        return dict(self._coefficients)

    def evaluate(self, cloud: Union[PhaseCloud, PhasePoint]) -> np.ndarray:
        base = np.atleast_2d(np.asarray(cloud.base, dtype=float))
        fiber = np.atleast_2d(np.asarray(cloud.fiber, dtype=float))
        if base.shape[1] != self.n or fiber.shape[1] != self.d:
            raise DimensionMismatch(
                f"{self.name} lives on (n, d) = ({self.n}, {self.d}), "
                f"got ({base.shape[1]}, {fiber.shape[1]})"
            )
        out = np.zeros(fiber.shape[0], dtype=complex)
        for xi, profile in self._terms.items():
            out += profile(base) * np.exp(2j * np.pi * (fiber @ np.asarray(xi, dtype=float)))
        return out

    def restrict(self, keep) -> FourierObservable:
        return FourierObservable(
            {xi: profile for xi, profile in self._terms.items() if keep(xi)},
            self.n, self.d, self.name,
        )

    def check_chart(self, chart: Chart):
        if chart.n != self.n:
            raise DimensionMismatch(f"{self.name} has a {self.n}-d base, the chart is {chart.n}-d")
        for xi, profile in self._terms.items():
            if profile.center is None:
                continue
            center = profile.center
            if center.shape != (chart.n,):
                raise DimensionMismatch(f"profile center {tuple(center)} is not a chart point")
            for k in range(chart.n):
                if chart.periodic[k]:
                    continue
                if not chart.lower[k] < center[k] < chart.upper[k]:
                    raise ProfileOutsideChart(
                        f"profile of {xi} centered at {tuple(center)} leaves the chart "
                        f"({chart.lower[k]}, {chart.upper[k]}) on axis {k}"
                    )


def evaluate(obs: FourierObservable, p: Union[PhasePoint, PhaseCloud]) -> complex:
    values = obs.evaluate(p)
    return complex(values[0]) if isinstance(p, PhasePoint) else values


def conditional_expectation(obs: FourierObservable, flow: Optional[FlowSpec] = None) -> FourierObservable:
    if flow is None:
        return obs.restrict(lambda xi: not any(xi))
    return obs.restrict(flow.is_invariant_mode)


def torus_observable(coefficients: Mapping[Sequence[int], complex], name: str = "f") -> FourierObservable:
    return FourierObservable(
        {xi: ConstantProfile(c) for xi, c in coefficients.items()}, n=0, d=2, name=name
    )


def aniso_weight_h(xi: Sequence[int]) -> float:
    if len(xi) != 2:
        raise DimensionMismatch(f"the anisotropic weight is defined on Z^2, got {tuple(xi)}")
    if xi[1] == 0:
        return 1.0
    return math.sqrt(1 + (xi[0] / xi[1]) ** 2)


def norm_H_s0(obs: FourierObservable, s: float) -> float:
    if s < 0:
        raise ValidationError(f"regularity s={s} is negative")
    if obs.d != 2:
        raise DimensionMismatch(f"{obs.name} is not a torus observable")
    return math.sqrt(
        sum(aniso_weight_h(xi) ** (2 * s) * abs(c) ** 2 for xi, c in obs.coefficients().items())
    )


'''
Coefficient laws stand in for the smooth and analytic regularity classes:
the observable is the law truncated at ||ξ||∞ <= cutoff, and tail_mass bounds
what the truncation drops.
'''
LAWS = {
    "gaussian": lambda xi, scale: math.exp(-scale * (xi[0] ** 2 + xi[1] ** 2)),
    "exponential": lambda xi, scale: math.exp(-scale * (abs(xi[0]) + abs(xi[1]))),
}


def coefficient_law(law: str, cutoff: int, scale: float = 1.0, name: str = "f",
                    skip_invariant: bool = False) -> FourierObservable:
    try:
        rule = LAWS[law]
    except KeyError:
        raise UnknownRegistryId(f"unknown coefficient law {law!r}") from None
    if cutoff < 0:
        raise ValidationError(f"cutoff must be >= 0, got {cutoff}")
    grid = range(-cutoff, cutoff + 1)
    coefficients = {
        xi: rule(xi, scale)
        for xi in itertools.product(grid, grid)
        if not (skip_invariant and xi[1] == 0)
    }
    return torus_observable(coefficients, name=name)


def _axis_sums(law: str, cutoff: int, scale: float) -> Tuple[float, float]:
    '''(Σ_{|k|<=cutoff} |c_k|², Σ_{|k|>cutoff} |c_k|²) of the one-dimensional factor.'''
    if law == "exponential":
        q = math.exp(-2 * scale)
        inside = 1 + 2 * q * (1 - q ** cutoff) / (1 - q)
        outside = 2 * q ** (cutoff + 1) / (1 - q)
        return inside, outside
    if law == "gaussian":
        inside = 1 + 2 * sum(math.exp(-2 * scale * k * k) for k in range(1, cutoff + 1))
        outside = 2 * math.fsum(math.exp(-2 * scale * k * k) for k in range(cutoff + 1, cutoff + 400))
        return inside, outside
    raise UnknownRegistryId(f"unknown coefficient law {law!r}")


def tail_mass(law: str, cutoff: int, scale: float = 1.0) -> float:
    '''Σ_{||ξ||∞ > cutoff} |c_ξ|², from the separable one-dimensional sums.'''
    inside, outside = _axis_sums(law, cutoff, scale)
    return 2 * inside * outside + outside ** 2
