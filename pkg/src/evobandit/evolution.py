"""Mutation, recombination, crossover-then-selection and directed mutation.

All randomness flows through an explicit ``numpy.random.Generator``. Site
indices are 0-based.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from evobandit.core import as_motif, as_population, as_theta

# Half of a uniform bit: the per-site mean a random sequence would score.
UNIFORM_BIT_MEAN = 0.5


def make_stream(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """A reproducible PCG64 stream from a 64-bit integer (or seed sequence)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Independent child seed for ``(master_seed, *key)``; stable across runs."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def row_fitness(X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # elementwise-then-sum keeps identical rows bitwise identical, which the
    # tie acceptance of identical parents relies on
    return (X * theta).sum(axis=1)


def _accepts(child_fitness: np.ndarray, parent_mean: np.ndarray) -> np.ndarray:
    # inclusive, so identical parents always pass and the loop terminates
    return child_fitness >= parent_mean


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mutation rate must lie in (0, 1], got {mu}")
    return mu


def _check_targets(targets: Iterable[int], d: int) -> np.ndarray:
    idx = np.asarray(sorted(int(i) for i in targets), dtype=np.intp)
    if idx.size and (idx[0] < 0 or idx[-1] >= d):
        raise ValueError(f"target sites must lie in [0, {d}), got {idx.tolist()}")
    if np.unique(idx).size != idx.size:
        raise ValueError("duplicate target sites")
    return idx


def mutate(x, targets: Iterable[int], mu: float, rng: np.random.Generator) -> np.ndarray:
    """Resample each targeted site uniformly from {0, 1} with probability ``mu``.

    Untargeted sites are copied unchanged, so a targeted bit flips with
    probability ``mu / 2``.
    """
    x = as_motif(x)
    return mutate_population(x[None, :], targets, mu, rng)[0]


def mutate_population(S, targets: Iterable[int], mu: float, rng: np.random.Generator) -> np.ndarray:
    """Apply :func:`mutate` independently to every member of ``S``."""
    S = as_population(S)
    mu = _check_mu(mu)
    idx = _check_targets(targets, S.shape[1])
    out = S.copy()
    if idx.size == 0:
        return out
    shape = (S.shape[0], idx.size)
    resample = rng.random(shape) < mu
    fresh = rng.integers(0, 2, size=shape, dtype=np.uint8)
    out[:, idx] = np.where(resample, fresh, S[:, idx])
    return out


def recombine(x, y, rng: np.random.Generator) -> np.ndarray:
    """Child taking each site from ``x`` or ``y`` with probability 1/2, independently."""
    x, y = as_motif(x), as_motif(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    from_x = rng.random(x.shape[0]) < 0.5
    return np.where(from_x, x, y).astype(np.uint8)


def sample_accepted_children(
    theta,
    S,
    n: int,
    rng: np.random.Generator,
    max_attempts: int | None = None,
    return_parents: bool = False,
):
    """Draw ``n`` children from the accept/resample loop of crossover selection.

    Each attempt samples an ordered parent pair uniformly with replacement,
    recombines it, and keeps the child iff its fitness is at least the
    parents' mean. Attempts are generated in vectorised batches but consumed
    in order, so the result is distributed exactly like the sequential loop.

    Raises ``RuntimeError`` once more than ``max_attempts`` (default
    ``1000 * n``) attempts have been used.
    """
    theta, S = as_theta(theta), as_population(S)
    if theta.shape[0] != S.shape[1]:
        raise ValueError(f"dimension mismatch: theta has {theta.shape[0]}, population has {S.shape[1]}")
    M, d = S.shape
    if max_attempts is None:
        max_attempts = 1000 * n
    f_pop = row_fitness(S, theta)

    children = np.empty((n, d), dtype=np.uint8)
    parents = np.empty((n, 2), dtype=np.intp)
    filled = 0
    attempts = 0
    while filled < n:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"crossover selection exceeded {max_attempts} attempts with {filled}/{n} accepted"
            )
        need = n - filled
        k = min(max(2 * need + 8, 32), max_attempts - attempts)
        i = rng.integers(0, M, size=k)
        j = rng.integers(0, M, size=k)
        from_x = rng.random((k, d)) < 0.5
        z = np.where(from_x, S[i], S[j])
        accept = _accepts(row_fitness(z, theta), (f_pop[i] + f_pop[j]) / 2)
        hits = np.flatnonzero(accept)[:need]
        if hits.size == need:
            attempts += int(hits[-1]) + 1
        else:
            attempts += k
        children[filled:filled + hits.size] = z[hits]
        parents[filled:filled + hits.size, 0] = i[hits]
        parents[filled:filled + hits.size, 1] = j[hits]
        filled += hits.size

    assert np.all(
        _accepts(row_fitness(children, theta), (f_pop[parents[:, 0]] + f_pop[parents[:, 1]]) / 2)
    ), "accepted child failed the selection test"
    if return_parents:
        return children, parents
    return children


def crossover_selection(
    theta, S, rng: np.random.Generator, max_attempts: int | None = None
) -> np.ndarray:
    """Refill a population of ``len(S)`` children that beat their parents' mean."""
    S = as_population(S)
    return sample_accepted_children(theta, S, S.shape[0], rng, max_attempts=max_attempts)


def directed_targets(theta, S) -> np.ndarray:
    """Sites whose population-average score does not beat a uniform random bit.

    The test is ``mean_x(theta_i * x_i) <= theta_i * 1/2``; zero-weight sites
    always qualify.
    """
    theta, S = as_theta(theta), as_population(S)
    if theta.shape[0] != S.shape[1]:
        raise ValueError(f"dimension mismatch: theta has {theta.shape[0]}, population has {S.shape[1]}")
    site_score = (S * theta).mean(axis=0)
    return np.flatnonzero(site_score <= theta * UNIFORM_BIT_MEAN)


def directed_mutation(theta, S, mu: float, rng: np.random.Generator) -> np.ndarray:
    """Mutate every member of ``S`` on the sites picked by :func:`directed_targets`."""
    S = as_population(S)
    _check_mu(mu)
    return mutate_population(S, directed_targets(theta, S), mu, rng)
