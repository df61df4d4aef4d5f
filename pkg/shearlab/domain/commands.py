# pylint: disable=too-few-public-methods
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .covariance import EstimatorSpec
from .criterion import DEFAULT_DELTAS
from .flows import FlowSpec, VelocityField
from .observables import FourierObservable
from .scenarios import SaturnCloud


class Command:
    pass


@dataclass
class RunCovariance(Command):
    artifact: str
    flow: FlowSpec
    f1: FourierObservable
    f2: FourierObservable
    times: Tuple[float, ...]
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    fit: str = "power"
    block: int = 10


@dataclass
class RunCriterion(Command):
    artifact: str
    velocity: VelocityField
    xi_cutoff: int = 8
    deltas: Tuple[float, ...] = DEFAULT_DELTAS
    grid: Optional[int] = None


@dataclass
class RunPerturbationSmoke(Command):
    artifact: str
    velocity: VelocityField
    amount: float
    direction: Tuple[int, ...]
    xi_cutoff: int = 8
    deltas: Tuple[float, ...] = DEFAULT_DELTAS
    grid: Optional[int] = None


@dataclass
class RunGauss(Command):
    artifact: str
    dim: int
    center: Tuple[str, ...]
    radii: Tuple[str, ...]
    epsilon: str


@dataclass
class RunPadic(Command):
    artifact: str
    p: int
    level: int
    shift: int
    y0: int = 0
    character: int = 1
    digits: int = 16
    n_max: int = 20
    atoms: Tuple[int, ...] = ()
    samples: int = 10_000
    seed: int = 0


@dataclass
class RunSphereCheck(Command):
    artifact: str
    f1: FourierObservable
    f2: FourierObservable
    t0s: Tuple[float, ...]
    samples: int
    seed: int


@dataclass
class RunSaturn(Command):
    artifact: str
    cloud: SaturnCloud
    times: Tuple[float, ...]
    positions: int = 0


@dataclass
class RunWavefront(Command):
    artifact: str
    directions: int
    times: Tuple[float, ...]
    positions: int = 0
