import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evobandit.core import favored_ratio, population_fitness
from evobandit.evolution import (
    crossover_selection,
    derive_seed,
    directed_mutation,
    directed_targets,
    make_stream,
    mutate,
    mutate_population,
    recombine,
    sample_accepted_children,
)
from evobandit.oracle import exact_crossover_selection_mean
from evobandit.verify import random_instance

from conftest import theta_and_population

N_DRAWS = 100_000


def assert_3sigma(estimate, expected, se):
    assert np.all(np.abs(np.asarray(estimate) - expected) <= 3 * np.asarray(se)), (estimate, expected, se)


def test_streams_are_reproducible():
    a, b = make_stream(7), make_stream(7)
    np.testing.assert_array_equal(a.random(5), b.random(5))
    c = make_stream(derive_seed(7, 0, 1))
    d = make_stream(derive_seed(7, 0, 1))
    e = make_stream(derive_seed(7, 1, 1))
    x = c.random(4)
    np.testing.assert_array_equal(x, d.random(4))
    assert not np.array_equal(x, e.random(4))


def test_mutate_no_targets(rng):
    x = np.array([1, 0, 1, 1], dtype=np.uint8)
    for _ in range(20):
        np.testing.assert_array_equal(mutate(x, [], 1.0, rng), x)


def test_mutate_rejects_bad_arguments(rng):
    with pytest.raises(ValueError):
        mutate([0, 1], [0], 0.0, rng)
    with pytest.raises(ValueError):
        mutate([0, 1], [0], 1.5, rng)
    with pytest.raises(ValueError):
        mutate([0, 1], [2], 0.5, rng)
    with pytest.raises(ValueError):
        mutate([0, 1], [1, 1], 0.5, rng)


@pytest.mark.parametrize("mu, flip", [(1.0, 0.5), (0.8, 0.4)])
def test_mutation_flip_rate(rng, mu, flip):
    d = 5
    S = mutate_population(np.zeros((N_DRAWS, d), dtype=np.uint8), range(d), mu, rng)
    se = math.sqrt(flip * (1 - flip) / N_DRAWS)
    assert_3sigma(S.mean(axis=0), flip, se)


@settings(max_examples=200, deadline=None)
@given(theta_and_population(), st.floats(0.01, 1.0), st.integers(0, 2**32))
def test_mutation_leaves_untargeted_sites(case, mu, seed):
    _, S = case
    rng = make_stream(seed)
    d = S.shape[1]
    targets = [i for i in range(d) if rng.random() < 0.5]
    out = mutate_population(S, targets, mu, rng)
    keep = [i for i in range(d) if i not in targets]
    np.testing.assert_array_equal(out[:, keep], S[:, keep])
    assert set(np.unique(out)) <= {0, 1}


def test_recombine_identical_parents(rng):
    x = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    for _ in range(20):
        np.testing.assert_array_equal(recombine(x, x, rng), x)


def test_recombine_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        recombine([0, 1], [0, 1, 1], rng)


def test_recombine_site_law(rng):
    d = 4
    x, y = np.zeros(d, dtype=np.uint8), np.ones(d, dtype=np.uint8)
    Z = np.stack([recombine(x, y, rng) for _ in range(N_DRAWS)]).astype(float)
    assert_3sigma(Z.mean(axis=0), 0.5, math.sqrt(0.25 / N_DRAWS))
    # adjacent-site correlation of independent fair bits has SE ~ 1/sqrt(n)
    corr = np.corrcoef(Z[:, 0], Z[:, 1])[0, 1]
    assert abs(corr) <= 3 / math.sqrt(N_DRAWS)


@settings(max_examples=200, deadline=None)
@given(theta_and_population(max_M=2), st.integers(0, 2**32))
def test_recombine_takes_each_site_from_a_parent(case, seed):
    _, S = case
    x, y = S[0], S[-1]
    z = recombine(x, y, make_stream(seed))
    assert np.all((z == x) | (z == y))


def test_selection_constant_population(rng):
    S = np.tile(np.array([1, 0, 1], dtype=np.uint8), (6, 1))
    np.testing.assert_array_equal(crossover_selection([0.5, 2.0, -1.0], S, rng), S)


def test_selection_worked_instance_monte_carlo(rng):
    kids = sample_accepted_children([1.0, 1.0], [[0, 0], [1, 1]], N_DRAWS, rng)
    f = kids.sum(axis=1).astype(float)
    assert_3sigma(f.mean(), 8 / 7, f.std(ddof=1) / math.sqrt(N_DRAWS))


def test_selection_children_beat_their_parents(rng):
    theta = rng.standard_normal(6)
    S = rng.integers(0, 2, size=(8, 6), dtype=np.uint8)
    kids, parents = sample_accepted_children(theta, S, 500, rng, return_parents=True)
    f_pop = S @ theta
    assert np.all(kids @ theta >= (f_pop[parents[:, 0]] + f_pop[parents[:, 1]]) / 2 - 1e-12)
    assert crossover_selection(theta, S, rng).shape == S.shape


def test_selection_attempt_budget(rng):
    S = rng.integers(0, 2, size=(10, 6), dtype=np.uint8)
    S[0] = 0
    S[1] = 1
    with pytest.raises(RuntimeError):
        crossover_selection(np.ones(6), S, rng, max_attempts=1)


def test_selection_raises_population_fitness_on_average(rng):
    theta = rng.standard_normal(6)
    S = rng.integers(0, 2, size=(6, 6), dtype=np.uint8)
    S = np.unique(S, axis=0)
    base = population_fitness(theta, S)
    means = np.array([population_fitness(theta, crossover_selection(theta, S, rng)) for _ in range(10_000)])
    assert means.mean() >= base - 3 * means.std(ddof=1) / math.sqrt(len(means))


def test_selection_agrees_with_oracle(rng):
    for _ in range(20):
        theta, S = random_instance(rng)
        exact = exact_crossover_selection_mean(theta, S).expected_accepted_fitness
        f = sample_accepted_children(theta, S, 50_000, rng) @ theta
        se = max(f.std(ddof=1) / math.sqrt(len(f)), 1e-12)
        assert abs(f.mean() - exact) <= 4 * se


def test_directed_targets_forced_cases():
    theta = np.array([0.5, 1.0, 2.0])
    np.testing.assert_array_equal(directed_targets(theta, np.zeros((4, 3), dtype=np.uint8)), [0, 1, 2])
    assert directed_targets(theta, np.ones((4, 3), dtype=np.uint8)).size == 0
    # zero-weight sites always qualify
    np.testing.assert_array_equal(directed_targets([0.0, 1.0], [[1, 1], [1, 1]]), [0])


def test_directed_mutation_leaves_fit_population(rng):
    S = np.ones((5, 3), dtype=np.uint8)
    np.testing.assert_array_equal(directed_mutation([1.0, 2.0, 3.0], S, 0.9, rng), S)


def test_directed_mutation_from_zeros(rng):
    d, M, mu, calls = 4, 200, 0.8, 1000
    theta = np.ones(d)
    S = np.zeros((M, d), dtype=np.uint8)
    ps = np.stack([favored_ratio(theta, directed_mutation(theta, S, mu, rng)) for _ in range(calls)])
    se = math.sqrt(0.4 * 0.6 / (M * calls))
    assert_3sigma(ps.mean(axis=0), mu / 2, se)


def test_directed_mutation_mean_law(rng):
    # E[p_i(S')] = p_i + (1/2 - p_i) mu on targeted sites, unchanged elsewhere
    theta = np.array([1.0, -1.0, 2.0, -0.5])
    M, mu, calls = 50, 0.6, 2000
    S = np.zeros((M, 4), dtype=np.uint8)
    S[:10, 0] = 1   # p=0.2 targeted
    S[:45, 1] = 1   # p=0.1 targeted
    S[:40, 2] = 1   # p=0.8 kept
    S[:25, 3] = 1   # p=0.5 targeted (boundary)
    p0 = favored_ratio(theta, S)
    ps = np.stack([favored_ratio(theta, directed_mutation(theta, S, mu, rng)) for _ in range(calls)])
    expected = np.where(p0 <= 0.5, p0 + (0.5 - p0) * mu, p0)
    se = np.maximum(ps.std(axis=0, ddof=1), 1e-12) / math.sqrt(calls)
    assert_3sigma(ps.mean(axis=0), expected, se)
    np.testing.assert_array_equal(ps[:, 2], 0.8)


def test_directed_mutation_ratio_floor(rng):
    # min_i p_i(S') >= mu/4 w.p. >= 1 - delta once M >= 32 ln(d/delta) / mu^2
    d, mu, delta = 8, 0.8, 0.1
    M = math.ceil(32 * math.log(d / delta) / mu**2)
    theta = rng.standard_normal(d)
    S = np.where(theta >= 0, 0, 1).astype(np.uint8)[None, :].repeat(M, axis=0)
    hits = sum(favored_ratio(theta, directed_mutation(theta, S, mu, rng)).min() >= mu / 4 for _ in range(1000))
    assert hits >= (1 - delta) * 1000
