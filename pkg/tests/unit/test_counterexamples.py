import cmath

import numpy as np
import pytest
from scipy import stats

from shearlab.domain import counterexamples, flows
from shearlab.domain.counterexamples import (
    PAdicCharacterObservable, padic_covariance_series, padic_orbit_values, sphere_no_decay_certificate,
)
from shearlab.domain.exceptions import ValidationError
from shearlab.domain.flows import PAdicTranslation
from shearlab.domain.observables import ConstantProfile, FourierObservable, GaussianProfile
from shearlab.domain.padic import PAdicInteger


def chi(m, p, j=1):
    return cmath.exp(2j * cmath.pi * j * m / p)


def shift(p, level, k, K=16):
    return PAdicInteger.from_int(k * p ** level, p, K)


class TestPAdicOrbit:

    def test_unit_shift_cycles_through_every_digit(self):
        obs = PAdicCharacterObservable(5, 0)

        values = padic_orbit_values(5, 16, shift(5, 0, 1), obs, PAdicInteger.zero(5, 16), 10)

        assert values == pytest.approx([chi(n % 5, 5) for n in range(11)])
        assert all(values[n] == values[n + 5] for n in range(6))

    def test_orbit_at_a_higher_digit(self):
        obs = PAdicCharacterObservable(3, 1)
        y0 = PAdicInteger.from_int(3, 3, 16)

        values = padic_orbit_values(3, 16, shift(3, 1, 2), obs, y0, 8)

        assert values == pytest.approx([chi(m, 3) for m in (1, 0, 2, 1, 0, 2, 1, 0, 2)])

    @pytest.mark.parametrize("p", [2, 3, 5, 7])
    def test_orbits_are_exactly_periodic_and_never_constant(self, p):
        rng = np.random.default_rng(p)
        for level in range(3):
            for k in range(1, p):
                for j in range(1, p):
                    y0 = PAdicInteger.from_int(int(rng.integers(0, p ** 12)), p, 16)
                    obs = PAdicCharacterObservable(p, level, j)
                    values = padic_orbit_values(p, 16, shift(p, level, k), obs, y0, 3 * p)
                    assert all(values[n] == values[n + p] for n in range(len(values) - p))
                    assert len(set(values)) >= 2

    def test_low_digits_of_the_shift_must_vanish(self):
        obs = PAdicCharacterObservable(5, 1)

        with pytest.raises(counterexamples.PreconditionViolated):
            padic_orbit_values(5, 16, PAdicInteger.from_int(6, 5, 16), obs, PAdicInteger.zero(5, 16), 5)
        with pytest.raises(counterexamples.PreconditionViolated):
            padic_orbit_values(5, 16, PAdicInteger.from_int(25, 5, 16), obs, PAdicInteger.zero(5, 16), 5)

    def test_observable_must_read_a_carried_digit(self):
        obs = PAdicCharacterObservable(5, 20)

        with pytest.raises(counterexamples.PreconditionViolated):
            padic_orbit_values(5, 16, shift(5, 0, 1), obs, PAdicInteger.zero(5, 16), 5)

    def test_trivial_characters_are_rejected(self):
        with pytest.raises(ValidationError):
            PAdicCharacterObservable(5, 0, character=0)
        with pytest.raises(ValidationError):
            PAdicCharacterObservable(5, 0, character=5)


class TestPAdicTranslation:

    def test_digit_marginals_stay_uniform(self):
        flow = PAdicTranslation(5, shifts=(10, 3, 1), K=8)
        cloud = flows.sample_invariant(flow, 100_000, seed=13)

        moved = flow.advance(cloud, 1)

        for j in range(flow.K):
            counts = np.bincount(moved.digits[:, j], minlength=5)
            assert stats.chisquare(counts).pvalue > 1e-3

    def test_invariant_fraction(self):
        flow = PAdicTranslation(5, shifts=(10, 25, 0), K=8)

        assert counterexamples.invariant_fraction(flow, 1) == pytest.approx(2 / 3)
        assert counterexamples.invariant_fraction(flow, 0) == 1

    def test_covariance_does_not_decay(self):
        flow = PAdicTranslation(5, shifts=(10,), K=16)
        obs = PAdicCharacterObservable(5, 1, 2)

        series = padic_covariance_series(flow, obs, range(21), 2_000, seed=3)

        magnitudes = np.abs(series.values)
        assert np.array_equal(series.values[:-5], series.values[5:])
        assert magnitudes[0] == pytest.approx(1.0)
        assert magnitudes.max() == pytest.approx(magnitudes[0])

    def test_invariant_atoms_are_removed(self):
        flow = PAdicTranslation(3, shifts=(3, 9), K=8)
        obs = PAdicCharacterObservable(3, 1)

        series = padic_covariance_series(flow, obs, range(7), 4_000, seed=1)

        assert np.array_equal(series.values[:-3], series.values[3:])
        assert abs(series.values[0]) == pytest.approx(0.5, abs=4 * series.stderr[0] + 1e-12)


class TestSphereCertificate:

    @pytest.mark.parametrize("t0", [0.0, 1.0, 2.5, 10.0, 123.4])
    def test_covariance_repeats_after_two_pi(self, t0):
        f1 = FourierObservable({(1,): GaussianProfile((1.0, 3.0), 0.7), (2,): ConstantProfile(0.5)}, 2, 1)
        f2 = FourierObservable({(1,): ConstantProfile(1.0), (0,): GaussianProfile((2.0, 1.0), 0.4)}, 2, 1)

        certificate = sphere_no_decay_certificate(f1, f2, t0, 5_000, seed=17)

        assert certificate.holds
        assert certificate.difference < 1e-9

    def test_fiber_invariant_observable_has_no_covariance(self):
        f1 = FourierObservable({(1,): ConstantProfile(1.0), (0,): ConstantProfile(2.0)}, 2, 1)
        f2 = FourierObservable({(0,): GaussianProfile((1.5, 3.0), 0.5)}, 2, 1)

        certificate = sphere_no_decay_certificate(f1, f2, 1.0, 20_000, seed=2)

        assert abs(certificate.cov_t0) < 4 * certificate.stderr + 1e-12
        assert abs(certificate.cov_shifted) < 4 * certificate.stderr + 1e-12

    def test_phase_character_rotates_without_decay(self):
        f = FourierObservable({(1,): ConstantProfile(1.0)}, 2, 1)
        for t0 in (0.3, 2.0, 50.0):
            certificate = sphere_no_decay_certificate(f, f, t0, 1_000, seed=4)
            assert abs(certificate.cov_t0) == pytest.approx(1.0)
            assert certificate.cov_t0 == pytest.approx(cmath.exp(1j * t0))

    def test_negative_start_is_rejected(self):
        f = FourierObservable({(1,): ConstantProfile(1.0)}, 2, 1)

        with pytest.raises(ValidationError):
            sphere_no_decay_certificate(f, f, -1.0, 1_000, seed=4)

