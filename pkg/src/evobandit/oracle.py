"""Brute-force reference computations.

These deliberately avoid the production code paths in ``evolution`` and
``bayes``: selection statistics come from enumerating every parent pair and
every Rademacher coin vector, optima from scanning the whole cube, and the
posterior from a dense solve on the materialised design matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from evobandit.core import PriorSpec, as_population, as_theta

MAX_ORACLE_DIM = 14
MAX_ORACLE_POP = 12
MAX_SCAN_DIM = 20


@dataclass(frozen=True)
class PairStats:
    i: int
    j: int
    accept_probability: float
    accepted_fitness_mass: float  # E[f(z) * 1{accept}] for this ordered pair


@dataclass(frozen=True)
class ExactSelectionStats:
    expected_accepted_fitness: float
    acceptance_probability: float
    pairs: tuple[PairStats, ...]


def _coin_vectors(k: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=k))).reshape(2 ** k, k)


def exact_crossover_selection_mean(theta, S) -> ExactSelectionStats:
    """Exact law of one accepted child of crossover selection.

    With ``z = (x + y)/2 + e * (x - y)/2`` for Rademacher ``e``, the child is
    accepted iff ``sum_i theta_i (x_i - y_i) e_i >= 0``. Every ordered pair
    has weight ``1/M^2`` and every coin vector over the differing sites weight
    ``2^-k``; the accepted-child mean is ``E[f(z) 1{acc}] / P(acc)``.
    """
    theta, S = as_theta(theta), as_population(S)
    M, d = S.shape
    if d > MAX_ORACLE_DIM or M > MAX_ORACLE_POP:
        raise ValueError(f"enumeration too large: d={d} (max {MAX_ORACLE_DIM}), M={M} (max {MAX_ORACLE_POP})")
    Sf = S.astype(np.float64)
    pairs = []
    mass_total = 0.0
    prob_total = 0.0
    for i in range(M):
        for j in range(M):
            x, y = Sf[i], Sf[j]
            parent_mean = float(np.dot(theta, x + y)) / 2
            diff = np.flatnonzero(x != y)
            if diff.size == 0:
                prob, mass = 1.0, parent_mean
            else:
                e = _coin_vectors(diff.size)
                half_gain = 0.5 * (e @ (theta[diff] * (x[diff] - y[diff])))
                accepted = half_gain >= 0
                prob = float(accepted.mean())
                mass = float(np.where(accepted, parent_mean + half_gain, 0.0).mean())
            pairs.append(PairStats(i, j, prob, mass))
            prob_total += prob
            mass_total += mass
    return ExactSelectionStats(
        expected_accepted_fitness=mass_total / prob_total,
        acceptance_probability=prob_total / (M * M),
        pairs=tuple(pairs),
    )


def exhaustive_optimum(theta) -> tuple[float, np.ndarray]:
    """Scan ``{0,1}^d``; return the max and the lexicographically largest argmax."""
    theta = as_theta(theta)
    d = theta.shape[0]
    if d > MAX_SCAN_DIM:
        raise ValueError(f"exhaustive scan limited to d <= {MAX_SCAN_DIM}, got {d}")
    shifts = np.arange(d - 1, -1, -1)
    best_val, best_code = -math.inf, 0
    chunk = 1 << 16
    for start in range(0, 1 << d, chunk):
        codes = np.arange(start, min(start + chunk, 1 << d))
        bits = (codes[:, None] >> shifts) & 1
        vals = (bits * theta).sum(axis=1)
        top = vals.max()
        if top >= best_val:
            best_val = float(top)
            best_code = int(codes[np.flatnonzero(vals == top)[-1]])
    best = ((best_code >> shifts) & 1).astype(np.uint8)
    return best_val, best


def dense_ridge(X, u, d: int, prior: PriorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and precision from the full design matrix."""
    Phi = np.asarray(X, dtype=np.float64).reshape(-1, d)
    U = np.asarray(u, dtype=np.float64).reshape(-1)
    if Phi.shape[0] != U.shape[0]:
        raise ValueError(f"{Phi.shape[0]} rows but {U.shape[0]} measurements")
    gram = Phi.T @ Phi
    mean = np.linalg.solve(gram + prior.sigma ** 2 * prior.lam * np.eye(d), Phi.T @ U)
    precision = gram / prior.sigma ** 2 + prior.lam * np.eye(d)
    return mean, precision


def ascent_lower_bounds(theta, S) -> tuple[float, float]:
    """The two ascent lower bounds for crossover selection.

    Returns ``(E_{x,y} ||theta * (x - y)|| / (2 sqrt 2),
    sum_i |theta_i| Var_i(S) / sqrt(2 d))`` with the expectation over ordered
    pairs drawn uniformly with replacement.
    """
    theta, S = as_theta(theta), as_population(S)
    M, d = S.shape
    Sf = S.astype(np.float64)
    total = 0.0
    for i in range(M):
        for j in range(M):
            total += float(np.linalg.norm(theta * (Sf[i] - Sf[j])))
    pair_bound = total / (M * M) / (2 * math.sqrt(2))
    q = Sf.mean(axis=0)
    var_bound = float(np.sum(np.abs(theta) * q * (1 - q))) / math.sqrt(2 * d)
    return pair_bound, var_bound
