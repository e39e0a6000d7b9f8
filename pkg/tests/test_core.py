import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from evobandit.core import (
    PriorSpec,
    as_population,
    favored_ratio,
    fitness,
    optimum_point,
    optimum_value,
    population_fitness,
    site_variance,
    suboptimality_gap,
    suboptimality_gap_from_ratio,
)

from conftest import theta_and_population


def brute_max(theta):
    return max(float(np.dot(theta, x)) for x in itertools.product((0, 1), repeat=len(theta)))


@pytest.mark.parametrize(
    "theta, x, expected",
    [([1, -2, 3], [1, 1, 1], 2.0), ([0.7, -1.1, 4.0], [0, 0, 0], 0.0), ([0.5, 0.5], [1, 0], 0.5)],
)
def test_fitness(theta, x, expected):
    assert fitness(theta, x) == expected


def test_fitness_dimension_mismatch():
    with pytest.raises(ValueError):
        fitness([1.0, 2.0], [1, 0, 1])


def test_motif_must_be_binary():
    with pytest.raises(ValueError):
        fitness([1.0, 2.0], [1, 2])


def test_population_fitness():
    assert population_fitness([1, 1], [[0, 0], [1, 1]]) == 1.0
    assert population_fitness([1, -1], [[1, 1], [1, 0]]) == 0.5
    assert population_fitness([2.0, -3.0], [[1, 0]] * 4) == fitness([2.0, -3.0], [1, 0])


def test_empty_population_rejected():
    with pytest.raises(ValueError):
        as_population(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        favored_ratio([1.0], [])


def test_optimum():
    assert optimum_value([1, -2, 3]) == 4.0
    assert optimum_value([-1, -2]) == 0.0
    np.testing.assert_array_equal(optimum_point([1, -2, 3]), [1, 0, 1])
    np.testing.assert_array_equal(optimum_point([0, 0]), [1, 1])


def test_optimum_matches_enumeration(rng):
    for d in range(1, 13):
        theta = rng.standard_normal(d)
        assert optimum_value(theta) == pytest.approx(brute_max(theta), abs=1e-12)
        assert fitness(theta, optimum_point(theta)) == pytest.approx(optimum_value(theta), abs=1e-12)


def test_favored_ratio():
    np.testing.assert_allclose(favored_ratio([1, -1], [[1, 0], [0, 0]]), [0.5, 1.0])
    theta = np.array([0.0, -2.0, 3.0])
    np.testing.assert_array_equal(favored_ratio(theta, np.tile(optimum_point(theta), (5, 1))), [1, 1, 1])
    # zero weight favours the 1 bit
    np.testing.assert_allclose(favored_ratio([0.0], [[1], [0], [0], [0]]), [0.25])


def test_site_variance():
    np.testing.assert_allclose(site_variance([[1, 0], [0, 0]]), [0.25, 0.0])
    np.testing.assert_array_equal(site_variance([[1, 0, 1]] * 3), [0, 0, 0])


def test_suboptimality_gap():
    theta = [1.0, -2.0, 3.0]
    assert suboptimality_gap(theta, [optimum_point(theta)]) == 0.0
    assert suboptimality_gap([1, 1], [[0, 0]]) == 2.0


def test_prior_spec_validation():
    with pytest.raises(ValueError):
        PriorSpec(lam=0.0)
    with pytest.raises(ValueError):
        PriorSpec(sigma=-1.0)


@settings(max_examples=300, deadline=None)
@given(theta_and_population())
def test_gap_identities(case):
    theta, S = case
    gap = suboptimality_gap(theta, S)
    alt = suboptimality_gap_from_ratio(theta, S)
    assert gap == pytest.approx(alt, rel=1e-10, abs=1e-10)
    assert gap >= -1e-12
    at_opt = np.all(S @ theta >= optimum_value(theta) - 1e-12)
    assert (abs(gap) <= 1e-9) == bool(at_opt)

    p = favored_ratio(theta, S)
    assert np.all((0 <= p) & (p <= 1))
    np.testing.assert_allclose(p * (1 - p), site_variance(S), atol=1e-15)
    assert np.sum(np.abs(theta) * p * (1 - p)) == pytest.approx(
        np.sum(np.abs(theta) * site_variance(S)), abs=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(theta_and_population(max_M=4))
def test_statistics_order_invariant(case):
    theta, S = case
    perm = S[::-1]
    assert population_fitness(theta, perm) == pytest.approx(population_fitness(theta, S), abs=1e-12)
    np.testing.assert_array_equal(favored_ratio(theta, perm), favored_ratio(theta, S))
