import math

import numpy as np
import pytest

from shearlab.domain import scenarios
from shearlab.domain.exceptions import ValidationError
from shearlab.domain.scenarios import SaturnCloud, run_saturn, run_wavefront


def ring(**overrides):
    params = dict(r0=1.0, r1=2.0, arc=0.1, particles=100_000, seed=7)
    params.update(overrides)
    return SaturnCloud(**params)


class TestSaturn:

    def test_initial_arc_has_the_sinc_first_mode(self):
        frame, = run_saturn(ring(), [0.0])

        expected = math.sin(0.1 * math.pi) / (0.1 * math.pi)
        assert frame.modes[0] == pytest.approx(expected, abs=0.005)
        assert len(frame.modes) == 8

    def test_shear_spreads_the_arc(self):
        start, late = run_saturn(ring(), [0.0, 20_000.0])

        assert late.modes[0] < 0.05
        assert np.all(late.modes < start.modes)

    def test_single_radius_rotates_rigidly(self):
        frames = run_saturn(ring(r1=1.0, particles=5_000), [0.0, 3.0, 50.0, 1000.0])

        for frame in frames[1:]:
            assert frame.modes == pytest.approx(frames[0].modes, abs=1e-9)

    def test_positions_lie_on_the_orbits(self):
        cloud = ring(particles=1_000)
        radius, _ = cloud.initial()

        frame, = run_saturn(cloud, [12.0], positions=10)

        assert len(frame.x) == 10
        assert np.hypot(frame.x, frame.y) == pytest.approx(radius[:10])

    def test_angular_speed_is_keplerian(self):
        assert scenarios.angular_speed(np.array([1.0, 4.0])) == pytest.approx([1.0, 0.125])

    @pytest.mark.parametrize("overrides", [dict(r0=0.0), dict(r0=-1.0), dict(r1=0.5), dict(arc=0.0), dict(arc=1.5)])
    def test_bad_clouds_are_rejected(self, overrides):
        with pytest.raises(ValidationError):
            ring(**overrides)


class TestWavefront:

    def test_everything_starts_at_the_origin(self):
        frame, = run_wavefront(2_000, [0.0])

        assert frame.discrepancy == pytest.approx(1 - 1 / 32 ** 2)

    def test_half_unit_front_is_a_circle(self):
        x, y = scenarios.wavefront_points(2_000, 0.5)

        sx, sy = np.where(x >= 0.5, x - 1, x), np.where(y >= 0.5, y - 1, y)
        assert np.hypot(sx, sy) == pytest.approx(np.full(2_000, 0.5), abs=1e-12)

    def test_front_equidistributes(self):
        frames = run_wavefront(20_000, [0.0, 10.0, 500.0])

        assert frames[-1].discrepancy < 0.02
        assert frames[-1].discrepancy < frames[0].discrepancy

    def test_positions_are_subsampled(self):
        frame, = run_wavefront(2_000, [3.0], positions=100)

        assert len(frame.x) == len(frame.y) == 100

    def test_needs_enough_directions(self):
        with pytest.raises(ValidationError):
            run_wavefront(999, [1.0])


def test_box_discrepancy_of_a_grid_is_small():
    centers = (np.arange(64) + 0.5) / 64
    x, y = np.meshgrid(centers, centers)

    assert scenarios.box_discrepancy(x.ravel(), y.ravel()) == pytest.approx(0.0, abs=1e-12)
