import itertools
import math

import numpy as np
import pytest

from shearlab.domain import observables
from shearlab.domain.exceptions import ValidationError
from shearlab.domain.flows import Chart, DimensionMismatch, PhaseCloud, PhasePoint, Transvection
from shearlab.domain.observables import (
    ConstantProfile, FourierObservable, GaussianProfile, HatProfile, TrigProfile,
    coefficient_law, conditional_expectation, torus_observable,
)


def test_pure_observable_evaluates_its_fourier_sum():
    f = torus_observable({(1, 0): 1.0, (0, 2): 0.5j})

    value = observables.evaluate(f, PhasePoint.make((), (0.25, 0.125)))

    assert value == pytest.approx(1j + 0.5j * 1j)


def test_evaluate_on_a_cloud_returns_one_value_per_point():
    f = torus_observable({(1, 1): 2.0})
    cloud = PhaseCloud(np.zeros((3, 0)), np.array([[0.0, 0.0], [0.5, 0.0], [0.25, 0.25]]))

    assert observables.evaluate(f, cloud) == pytest.approx([2.0, -2.0, -2.0])


def test_base_dependent_terms_multiply_the_character():
    f = FourierObservable({(1,): GaussianProfile((0.5,), 0.1, amplitude=3.0)}, n=1, d=1)

    value = observables.evaluate(f, PhasePoint.make((0.5,), (0.5,)))

    assert value == pytest.approx(-3.0)


def test_coefficients_need_constant_profiles():
    f = FourierObservable({(1, 0): GaussianProfile((0.5,), 0.1)}, n=1, d=2)

    with pytest.raises(observables.NonConstantProfile):
        f.coefficients()
    assert not f.is_pure


def test_frequencies_must_be_integer_vectors_of_the_fiber_dimension():
    with pytest.raises(ValidationError):
        torus_observable({(0.5, 1): 1.0})
    with pytest.raises(DimensionMismatch):
        torus_observable({(1, 2, 3): 1.0})


def test_observable_rejects_points_of_another_phase_space():
    f = torus_observable({(1, 0): 1.0})

    with pytest.raises(DimensionMismatch):
        f.evaluate(PhasePoint.make((0.1,), (0.2, 0.3)))


def test_conditional_expectation_keeps_the_invariant_modes():
    f = torus_observable({(0, 0): 1.0, (3, 0): 2.0, (1, 1): 4.0, (0, 5): 8.0})

    lower = conditional_expectation(f, Transvection("lower"))
    upper = conditional_expectation(f, Transvection("upper"))

    assert set(lower.support) == {(0, 0), (3, 0)}
    assert set(upper.support) == {(0, 0), (0, 5)}
    assert set(conditional_expectation(f).support) == {(0, 0)}


def test_anisotropic_weight():
    assert observables.aniso_weight_h((7, 0)) == 1.0
    assert observables.aniso_weight_h((3, 4)) == pytest.approx(1.25)
    assert observables.aniso_weight_h((-3, 4)) == pytest.approx(1.25)


def test_anisotropic_norm():
    f = torus_observable({(3, 4): 1.0, (5, 0): 2.0})

    assert observables.norm_H_s0(f, 0) == pytest.approx(math.sqrt(5))
    assert observables.norm_H_s0(f, 1) == pytest.approx(math.sqrt(1.25 ** 2 + 4))
    with pytest.raises(ValidationError):
        observables.norm_H_s0(f, -1)


@pytest.mark.parametrize("law", ["exponential", "gaussian"])
def test_tail_mass_accounts_for_the_truncated_coefficients(law):
    kept = sum(abs(c) ** 2 for c in coefficient_law(law, 4, scale=0.5).coefficients().values())
    full = sum(
        abs(c) ** 2 for c in coefficient_law(law, 60, scale=0.5).coefficients().values()
    )

    assert kept + observables.tail_mass(law, 4, scale=0.5) == pytest.approx(full, rel=1e-12)


def test_coefficient_law_can_skip_the_invariant_modes():
    f = coefficient_law("gaussian", 3, skip_invariant=True)

    assert all(xi[1] != 0 for xi in f.support)
    assert len(f.support) == 7 * 6


def test_unknown_law_is_rejected():
    with pytest.raises(observables.UnknownRegistryId):
        coefficient_law("cauchy", 3)


def test_profiles():
    x = np.array([[0.5], [0.7], [0.9]])

    assert HatProfile((0.5,), 0.2, amplitude=2.0)(x) == pytest.approx([2.0, 0.0, 0.0])
    assert HatProfile((0.5,), 0.4)(np.array([[0.7]]))[0] == pytest.approx(0.5)
    assert ConstantProfile(3.0)(x) == pytest.approx([3.0] * 3)
    assert TrigProfile({(0,): 1.0}).is_constant
    assert not TrigProfile({(2,): 1.0}).is_constant
    assert TrigProfile({(1,): 1.0})(np.array([[math.pi]]))[0] == pytest.approx(-1.0)


def test_profile_centers_must_sit_inside_the_chart():
    chart = Chart((1.0, 0.0), (2.0, 2 * math.pi), (False, True))
    inside = FourierObservable({(1,): GaussianProfile((1.5, 7.0), 0.1)}, n=2, d=1)
    outside = FourierObservable({(1,): GaussianProfile((2.5, 1.0), 0.1)}, n=2, d=1)
    on_edge = FourierObservable({(1,): HatProfile((1.0, 1.0), 0.1)}, n=2, d=1)

    inside.check_chart(chart)
    with pytest.raises(observables.ProfileOutsideChart):
        outside.check_chart(chart)
    with pytest.raises(observables.ProfileOutsideChart):
        on_edge.check_chart(chart)


def test_grid_profile_interpolates():
    chart = Chart((0.0,), (1.0,))
    profile = observables.GridProfile(chart, np.linspace(0, 2, 11))

    assert profile(np.array([[0.25]]))[0] == pytest.approx(0.5)


def test_restrict_keeps_selected_terms_only():
    f = torus_observable({xi: 1.0 for xi in itertools.product(range(-1, 2), repeat=2)})

    g = f.restrict(lambda xi: xi[0] > 0)

    assert set(g.support) == {(1, -1), (1, 0), (1, 1)}
    assert len(f.support) == 9


def random_observable(rng, cutoff=3):
    modes = {tuple(int(k) for k in rng.integers(-cutoff, cutoff + 1, size=2)) for _ in range(8)}
    return torus_observable({xi: complex(*rng.normal(size=2)) for xi in modes})


def random_torus_observable(rng):
    grid = range(-3, 4)
    return torus_observable({(a, b): complex(*rng.normal(size=2)) for a in grid for b in grid})


def test_grid_energy_equals_coefficient_energy():
    rng = np.random.default_rng(31)
    axis = np.arange(256) / 256
    x, y = np.meshgrid(axis, axis)
    cloud = PhaseCloud(np.zeros((256 * 256, 0)), np.stack([x.ravel(), y.ravel()], axis=-1))
    for _ in range(5):
        f = random_torus_observable(rng)

        energy = np.mean(np.abs(f.evaluate(cloud)) ** 2)

        assert energy == pytest.approx(sum(abs(c) ** 2 for c in f.coefficients().values()), abs=1e-10)


@pytest.mark.parametrize("flow", [None, Transvection("lower"), Transvection("upper")])
def test_conditional_expectation_is_idempotent(flow):
    rng = np.random.default_rng(32)
    for _ in range(50):
        once = conditional_expectation(random_observable(rng), flow)

        twice = conditional_expectation(once, flow)

        assert twice.terms == once.terms


def test_anisotropic_norm_grows_with_the_regularity():
    rng = np.random.default_rng(33)
    for _ in range(50):
        f = random_observable(rng, cutoff=6)
        norms = [observables.norm_H_s0(f, s) for s in np.linspace(0.0, 3.0, 13)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
