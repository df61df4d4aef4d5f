import math

import numpy as np
import pytest
from scipy import special

from shearlab.domain import covariance, flows
from shearlab.domain.covariance import (
    EstimatorSpec, cov_series, mc_cov, quadrature_cov, spectral_cov_transvection,
)
from shearlab.domain.exceptions import ValidationError
from shearlab.domain.flows import Chart, DiskBilliard, SphereGeodesic, Suspension, TorusGeodesic, Transvection
from shearlab.domain.observables import (
    ConstantProfile, FourierObservable, GaussianProfile, HatProfile, TrigProfile, torus_observable,
)


def random_torus_observable(rng, cutoff=3, name="f"):
    grid = range(-cutoff, cutoff + 1)
    return torus_observable(
        {(a, b): complex(*rng.normal(size=2)) for a in grid for b in grid}, name=name
    )


def constant_modes(modes, n, d):
    return FourierObservable({xi: ConstantProfile(c) for xi, c in modes.items()}, n=n, d=d)


def random_profile(rng, flow):
    if rng.random() < 0.3:
        return ConstantProfile(complex(*rng.normal(size=2)))
    if isinstance(flow, TorusGeodesic):
        return TrigProfile({(int(rng.integers(-2, 3)),): complex(*rng.normal(size=2))})
    return GaussianProfile((rng.uniform(-0.8, 0.8),), rng.uniform(0.2, 0.6), complex(*rng.normal(size=2)))


def random_configuration(rng):
    '''A flow with a spectral estimator, two observables on it and a time.'''
    kind = int(rng.integers(3))
    if kind == 0:
        flow = Transvection(("lower", "upper")[int(rng.integers(2))])
        f1, f2 = random_torus_observable(rng, 2, "f1"), random_torus_observable(rng, 2, "f2")
        return flow, f1, f2, int(rng.integers(0, 5))
    flow = TorusGeodesic(2) if kind == 1 else DiskBilliard()
    modes = {tuple(int(k) for k in rng.integers(-2, 3, size=2)) for _ in range(3)}
    f1 = FourierObservable({xi: random_profile(rng, flow) for xi in modes}, 1, 2, "f1")
    f2 = FourierObservable({xi: random_profile(rng, flow) for xi in modes}, 1, 2, "f2")
    return flow, f1, f2, float(rng.uniform(0.0, 6.0))


class TestSpectralTransvection:

    def test_shear_moves_the_mode_out_of_the_support(self):
        f = torus_observable({(0, 1): 1.0})

        assert spectral_cov_transvection(f, f, 1) == 0
        assert spectral_cov_transvection(f, f, 0) == 1

    def test_support_overlap_is_hit_at_exactly_one_time(self):
        f1 = torus_observable({(2, 1): 1.0})
        f2 = torus_observable({(-1, 1): 1.0})

        values = [spectral_cov_transvection(f1, f2, n) for n in range(7)]

        assert values == [0, 0, 0, 1, 0, 0, 0]

    def test_invariant_modes_are_excluded(self):
        f = torus_observable({(0, 0): 5.0, (3, 0): 2.0})

        assert spectral_cov_transvection(f, f, 0) == 0

    def test_upper_variant_shears_the_other_coordinate(self):
        f1 = torus_observable({(1, 3): 1.0})
        f2 = torus_observable({(1, 1): 2.0})

        assert spectral_cov_transvection(f1, f2, 2, "upper") == 2
        assert spectral_cov_transvection(f1, f2, 2, "lower") == 0

    def test_non_pure_observables_are_rejected(self):
        f = FourierObservable({(0, 1): GaussianProfile((0.5,), 0.1)}, n=1, d=2)

        with pytest.raises(covariance.NotPureObservable):
            spectral_cov_transvection(f, f, 1)

    def test_hermitian_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            f1, f2 = random_torus_observable(rng), random_torus_observable(rng)
            n = int(rng.integers(-6, 7))
            left = spectral_cov_transvection(f1, f2, n)
            right = np.conj(spectral_cov_transvection(f2, f1, -n))
            assert abs(left - right) < 1e-12

    def test_variance_is_nonnegative(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            f = random_torus_observable(rng)
            assert spectral_cov_transvection(f, f, 0).real >= -1e-12


class TestQuadrature:

    def test_only_invariant_modes_give_zero(self):
        flow = TorusGeodesic(2)
        f = constant_modes({(0, 0): 1.0}, 1, 2)
        g = constant_modes({(1, 0): 1.0, (0, 0): 3.0}, 1, 2)

        assert quadrature_cov(flow, f, g, 7.0)[0] == 0

    @pytest.mark.parametrize("t", [0.0, 1.0, 10.0, 100.0])
    def test_circle_geodesic_matches_bessel(self, t):
        f = constant_modes({(1, 0): 1.0}, 1, 2)

        value, error = quadrature_cov(TorusGeodesic(2), f, f, t)

        assert value == pytest.approx(special.j0(2 * np.pi * t), abs=1e-9)
        assert error < 1e-9

    @pytest.mark.parametrize("t", [0.5, 5.0, 20.0])
    def test_sphere_geodesic_matches_sinc(self, t):
        f = constant_modes({(0, 0, 1): 1.0}, 2, 3)

        value, _ = quadrature_cov(TorusGeodesic(3), f, f, t)

        assert value == pytest.approx(np.sin(2 * np.pi * t) / (2 * np.pi * t), abs=1e-9)

    @pytest.mark.parametrize("xi", [(1, 0, 0), (1, 1, 1), (0, 2, -1)])
    @pytest.mark.parametrize("t", [1.3, 81.11308307896873, 1000.0])
    def test_sphere_directions_off_the_pole_match_sinc(self, xi, t):
        f = constant_modes({xi: 1.0}, 2, 3)
        phase = 2 * np.pi * t * np.linalg.norm(xi)

        value, _ = quadrature_cov(TorusGeodesic(3), f, f, t)

        assert value == pytest.approx(np.sin(phase) / phase, abs=1e-9)

    def test_covariance_zero_crossings_still_converge(self):
        f = constant_modes({(1, 0): 1.0}, 1, 2)
        t = special.jn_zeros(0, 1)[0] / (2 * np.pi)

        value, error = quadrature_cov(TorusGeodesic(2), f, f, t)

        assert abs(value) < 1e-9
        assert error < 1e-9

    def test_hermitian_symmetry_for_the_billiard(self):
        flow = DiskBilliard()
        f1 = FourierObservable({(1, 1): GaussianProfile((0.2,), 0.4), (2, -1): ConstantProfile(0.5j)}, 1, 2)
        f2 = FourierObservable({(1, 1): ConstantProfile(1.0), (2, -1): GaussianProfile((0.0,), 0.6)}, 1, 2)

        for t in (0.5, 3.0, 12.0):
            left, _ = quadrature_cov(flow, f1, f2, t)
            right, _ = quadrature_cov(flow, f2, f1, -t)
            assert abs(left - np.conj(right)) < 1e-12

    def test_variance_at_time_zero_is_the_weighted_mass(self):
        flow = DiskBilliard()
        f = FourierObservable({(1, 1): ConstantProfile(2.0)}, 1, 2)

        assert quadrature_cov(flow, f, f, 0.0)[0] == pytest.approx(4.0)

    def test_refinement_failure_is_reported(self):
        f = constant_modes({(1, 0): 1.0}, 1, 2)
        tight = covariance.QuadSpec(max_points=8)

        with pytest.raises(covariance.QuadratureNotConverged):
            quadrature_cov(TorusGeodesic(2), f, f, 50.0, tight)

    def test_maps_and_suspensions_have_no_quadrature(self):
        f = torus_observable({(0, 1): 1.0})

        with pytest.raises(covariance.EstimatorUnavailable):
            quadrature_cov(Transvection(), f, f, 1)


class TestMonteCarlo:

    def test_agrees_with_the_transvection_sum(self):
        flow = Transvection("lower")
        f = torus_observable({(0, 1): 1.0, (1, 1): 0.5, (1, 0): 0.7})
        for n in range(4):
            value, stderr = mc_cov(flow, f, f, n, 20_000, seed=n)
            assert abs(value - spectral_cov_transvection(f, f, n)) < 4 * stderr

    def test_single_mode_decorrelates_after_one_step(self):
        f = torus_observable({(0, 1): 1.0})

        value, stderr = mc_cov(Transvection(), f, f, 5, 20_000, seed=3)

        assert abs(value) < 4 * stderr

    def test_agrees_with_the_billiard_quadrature(self):
        flow = DiskBilliard()
        f1 = FourierObservable({(1, 1): GaussianProfile((0.0,), 0.5), (0, 0): ConstantProfile(1.0)}, 1, 2)
        f2 = FourierObservable({(1, 1): ConstantProfile(1.0), (0, 1): GaussianProfile((0.3,), 0.3)}, 1, 2)
        for t in (0.0, 0.7, 3.0):
            value, stderr = mc_cov(flow, f1, f2, t, 20_000, seed=5)
            exact, _ = quadrature_cov(flow, f1, f2, t)
            assert abs(value - exact) < 4 * stderr

    def test_fiber_invariant_observable_has_no_covariance(self):
        flow = DiskBilliard()
        f1 = FourierObservable({(0, 0): GaussianProfile((0.1,), 0.5), (1, 0): ConstantProfile(1.0)}, 1, 2)
        f2 = FourierObservable({(0, 0): GaussianProfile((-0.2,), 0.3)}, 1, 2)

        value, stderr = mc_cov(flow, f1, f2, 4.0, 20_000, seed=6)

        assert abs(value) < 4 * stderr

    def test_doubling_suspension_decorrelates(self):
        chart = Chart((1.0,), (2.0,))
        flow = Suspension(flows.BaseMapSpec("doubling"), flows.make_velocity("linear", chart, matrix=[[1.0]]))
        f = FourierObservable({(1, 0): HatProfile((1.5,), 0.4)}, 1, 2)

        value, stderr = mc_cov(flow, f, f, 200.0, 20_000, seed=7)

        assert abs(value) < 4 * stderr + 0.02

    def test_randomized_agreement_with_the_spectral_estimators(self):
        rng = np.random.default_rng(2024)
        misses = 0
        for trial in range(20):
            flow, f1, f2, t = random_configuration(rng)
            exact = cov_series(flow, f1, f2, [t]).values[0]
            value, stderr = mc_cov(flow, f1, f2, t, 10_000, seed=trial)
            misses += abs(value - exact) > 4 * stderr
        assert misses <= 1

    def test_needs_enough_samples(self):
        f = torus_observable({(0, 1): 1.0})

        with pytest.raises(ValidationError):
            mc_cov(Transvection(), f, f, 1, 50, seed=1)


class TestSeries:

    def test_variance_at_time_zero(self):
        f = torus_observable({(2, 3): 1.5})

        series = cov_series(Transvection(), f, f, [0])

        assert series.values[0] == pytest.approx(2.25)
        assert series.stderr[0] == 0
        assert series.estimator == covariance.SPECTRAL

    def test_times_must_be_sorted(self):
        f = torus_observable({(0, 1): 1.0})

        with pytest.raises(ValidationError):
            cov_series(Transvection(), f, f, [3, 1, 2])

    def test_sphere_series_repeats_after_two_pi(self):
        f = FourierObservable({(1,): ConstantProfile(1.0), (2,): GaussianProfile((1.0, 2.0), 0.5)}, 2, 1)
        spec = EstimatorSpec(covariance.MONTECARLO, samples=5_000, seed=8, common_random_numbers=True)

        series = cov_series(SphereGeodesic(), f, f, [1.0, 1.0 + 2 * math.pi], spec)

        assert abs(series.values[0] - series.values[1]) < 1e-9

    def test_monte_carlo_series_does_not_depend_on_threads(self):
        f = FourierObservable({(1, 1): ConstantProfile(1.0)}, 1, 2)
        times = [0.0, 1.0, 2.0, 3.0, 4.0]

        serial = cov_series(DiskBilliard(), f, f, times, EstimatorSpec(covariance.MONTECARLO, 1_000, seed=2))
        parallel = cov_series(DiskBilliard(), f, f, times,
                              EstimatorSpec(covariance.MONTECARLO, 1_000, seed=2, threads=4))

        assert np.array_equal(serial.values, parallel.values)
        assert np.array_equal(serial.stderr, parallel.stderr)

    def test_suspensions_need_monte_carlo(self):
        chart = Chart((1.0,), (2.0,))
        flow = Suspension(flows.BaseMapSpec("doubling"), flows.make_velocity("linear", chart, matrix=[[1.0]]))
        f = FourierObservable({(1, 0): ConstantProfile(1.0)}, 1, 2)

        with pytest.raises(covariance.EstimatorUnavailable):
            cov_series(flow, f, f, [1.0])

    def test_series_rejects_inconsistent_columns(self):
        with pytest.raises(ValidationError):
            covariance.CovarianceSeries(
                np.arange(3.0), np.zeros(3, complex), np.ones(3), covariance.SPECTRAL, "x", ("f", "g")
            )
