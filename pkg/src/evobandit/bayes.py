"""Gaussian prior/posterior over utility weights and noisy evaluations.

The posterior is kept as sufficient statistics: the precision matrix
``V = lam * I + X^T X / sigma^2`` and ``b = X^T u / sigma^2``, so the mean is
``V^{-1} b``. Raw rows are kept only when ``keep_history`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from evobandit.core import PriorSpec, as_motif, as_theta


@dataclass(frozen=True)
class PosteriorState:
    dim: int
    prior: PriorSpec
    precision: np.ndarray
    xu_accum: np.ndarray
    n_obs: int = 0
    keep_history: bool = False
    history_x: tuple = field(default=(), repr=False)
    history_u: tuple = field(default=(), repr=False)


def posterior_init(d: int, prior: PriorSpec, keep_history: bool = False) -> PosteriorState:
    if int(d) < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    d = int(d)
    return PosteriorState(
        dim=d,
        prior=prior,
        precision=prior.lam * np.eye(d),
        xu_accum=np.zeros(d),
        keep_history=keep_history,
    )


def posterior_ingest(state: PosteriorState, X, u) -> PosteriorState:
    """Fold a batch of observations ``(X[k], u[k])`` into the posterior."""
    X = np.asarray(X, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if X.size == 0:
        return state
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != state.dim:
        raise ValueError(f"observations must have dimension {state.dim}, got shape {X.shape}")
    u = u.reshape(-1)
    if u.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} motifs but {u.shape[0]} measurements")
    if not np.all(np.isfinite(u)):
        raise ValueError("measurements must be finite")
    inv_var = 1.0 / state.prior.sigma ** 2
    new = replace(
        state,
        precision=state.precision + inv_var * (X.T @ X),
        xu_accum=state.xu_accum + inv_var * (X.T @ u),
        n_obs=state.n_obs + X.shape[0],
    )
    if state.keep_history:
        new = replace(
            new,
            history_x=state.history_x + (X.copy(),),
            history_u=state.history_u + (u.copy(),),
        )
    return new


def posterior_mean(state: PosteriorState) -> np.ndarray:
    if state.n_obs == 0:
        return np.zeros(state.dim)
    factor = linalg.cho_factor(state.precision, lower=True)
    mean = linalg.cho_solve(factor, state.xu_accum)
    if not np.all(np.isfinite(mean)):
        raise np.linalg.LinAlgError("posterior mean is not finite")
    return mean


def posterior_sample(state: PosteriorState, rng: np.random.Generator) -> np.ndarray:
    """Draw ``theta ~ N(mean, V^{-1})`` via the Cholesky factor of ``V``."""
    L = np.linalg.cholesky(state.precision)
    g = rng.standard_normal(state.dim)
    # V = L L^T  =>  L^{-T} g has covariance V^{-1}
    offset = linalg.solve_triangular(L, g, lower=True, trans="T")
    if state.n_obs == 0:
        return offset
    mean = linalg.cho_solve((L, True), state.xu_accum)
    return mean + offset


def noisy_evaluate(theta_star, x, sigma: float, rng: np.random.Generator) -> float:
    """One measurement ``<theta*, x> + sigma * N(0, 1)``."""
    theta_star, x = as_theta(theta_star), as_motif(x)
    if theta_star.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {theta_star.shape[0]} vs {x.shape[0]}")
    if not sigma > 0:
        raise ValueError(f"noise std must be positive, got {sigma}")
    return float(theta_star @ x + sigma * rng.standard_normal())


def noisy_evaluate_many(theta_star: np.ndarray, X: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`noisy_evaluate`, one independent draw per row."""
    if not sigma > 0:
        raise ValueError(f"noise std must be positive, got {sigma}")
    return (X * theta_star).sum(axis=1) + sigma * rng.standard_normal(X.shape[0])


def sample_prior_theta(d: int, prior: PriorSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(int(d)) / np.sqrt(prior.lam)
