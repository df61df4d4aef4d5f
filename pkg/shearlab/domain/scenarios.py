'''
The two illustrative equidistribution scenarios: a sheared ring of dust on
Keplerian orbits and a wavefront on the flat 2-torus.
'''
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .exceptions import ValidationError
from .flows import make_rng, wrap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SaturnCloud:
    '''
    Particles uniform in radius on [r0, r1] and in angle on an initial arc
    (in turns). Angles advance by t ω(r) / 2π turns with ω(r) = r^(-3/2).
    '''
    r0: float
    r1: float
    arc: float
    particles: int
    seed: int
    radial_bins: int = 16
    modes: int = 8

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValidationError(f"orbit radii must be positive, got r0={self.r0}")
        if self.r1 < self.r0:
            raise ValidationError(f"r1={self.r1} is below r0={self.r0}")
        if not 0 < self.arc <= 1:
            raise ValidationError(f"arc must be in (0, 1] turns, got {self.arc}")
        if self.particles < 1:
            raise ValidationError("the cloud needs at least one particle")

    def initial(self):
        rng = make_rng(self.seed)
        radius = self.r0 + (self.r1 - self.r0) * rng.random(self.particles)
        angle = self.arc * rng.random(self.particles)
        return radius, angle


@dataclass(frozen=True)
class SaturnFrame:
    t: float
    modes: np.ndarray
    x: np.ndarray
    y: np.ndarray


def angular_speed(radius: np.ndarray) -> np.ndarray:
    return radius ** -1.5


def mode_magnitudes(radius: np.ndarray, angle: np.ndarray, cloud: SaturnCloud) -> np.ndarray:
    '''|mean e^{2πikφ}| for k = 1..modes, per radial bin, averaged over the nonempty bins.'''
    bins = 1 if cloud.r1 == cloud.r0 else cloud.radial_bins
    edges = np.linspace(cloud.r0, cloud.r1, bins + 1)
    index = np.clip(np.searchsorted(edges, radius, side="right") - 1, 0, bins - 1)
    k = np.arange(1, cloud.modes + 1)
    characters = np.exp(2j * np.pi * angle[:, None] * k[None, :])
    sums = np.zeros((bins, cloud.modes), dtype=complex)
    np.add.at(sums, index, characters)
    counts = np.bincount(index, minlength=bins)
    filled = counts > 0
    return np.mean(np.abs(sums[filled] / counts[filled, None]), axis=0)


def run_saturn(cloud: SaturnCloud, times: Sequence[float], positions: int = 0) -> List[SaturnFrame]:
    radius, angle0 = cloud.initial()
    shown = slice(0, min(positions, cloud.particles))
    frames = []
    for t in times:
        angle = wrap(angle0 + t * angular_speed(radius) / (2 * np.pi))
        phase = 2 * np.pi * angle[shown]
        frames.append(SaturnFrame(
            float(t), mode_magnitudes(radius, angle, cloud),
            radius[shown] * np.cos(phase), radius[shown] * np.sin(phase),
        ))
        logger.debug("saturn t=%s: first mode %.4f", t, frames[-1].modes[0])
    return frames


@dataclass(frozen=True)
class WavefrontFrame:
    t: float
    discrepancy: float
    x: np.ndarray
    y: np.ndarray


def wavefront_points(directions: int, t: float):
    theta = 2 * np.pi * np.arange(directions) / directions
    return wrap(t * np.cos(theta)), wrap(t * np.sin(theta))


def box_discrepancy(x: np.ndarray, y: np.ndarray, boxes: int = 32) -> float:
    '''max |#points in [0,a)x[0,b) / N - ab| over a, b in {1/boxes, ..., 1}.'''
    counts, _, _ = np.histogram2d(x, y, bins=boxes, range=[[0, 1], [0, 1]])
    inside = counts.cumsum(axis=0).cumsum(axis=1) / len(x)
    corners = np.arange(1, boxes + 1) / boxes
    return float(np.abs(inside - np.outer(corners, corners)).max())


def run_wavefront(directions: int, times: Sequence[float], positions: int = 0,
                  boxes: int = 32) -> List[WavefrontFrame]:
    if directions < 1000:
        raise ValidationError(f"a wavefront needs at least 1000 directions, got {directions}")
    frames = []
    for t in times:
        x, y = wavefront_points(directions, t)
        shown = slice(0, directions, max(directions // positions, 1)) if positions else slice(0, 0)
        frames.append(WavefrontFrame(float(t), box_discrepancy(x, y, boxes), x[shown], y[shown]))
    return frames
