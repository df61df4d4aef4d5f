# pylint: disable=too-few-public-methods
from dataclasses import dataclass
from typing import Tuple

from .covariance import CovarianceSeries


class Event:
    pass


@dataclass
class CovarianceComputed(Event):
    artifact: str
    series: CovarianceSeries
    fit: str = "power"
    block: int = 10


@dataclass
class VerdictReached(Event):
    artifact: str
    verdict: str
    witness: Tuple[int, ...] = None


@dataclass
class CertificateChecked(Event):
    artifact: str
    t0: float
    difference: float
