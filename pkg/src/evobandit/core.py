"""Domain types and pure fitness statistics.

Motif vectors are 1-D ``uint8`` arrays of 0/1 entries, populations are 2-D
``(M, d)`` arrays of the same kind (rows are members, duplicates allowed) and
utility weights are 1-D ``float64`` arrays. The ``as_*`` helpers validate and
normalise user input into those shapes; every other function assumes they
have been applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian prior precision ``lam`` and known observation noise ``sigma``."""

    lam: float = 1.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"prior precision must be positive, got {self.lam}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"noise std must be positive, got {self.sigma}")


def _check_bits(arr: np.ndarray) -> np.ndarray:
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("motif entries must be exactly 0 or 1")
    return arr.astype(np.uint8, copy=False)


def as_motif(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"motif vector must be 1-D with d >= 1, got shape {arr.shape}")
    return _check_bits(arr)


def as_population(S) -> np.ndarray:
    arr = np.asarray(S)
    if arr.ndim == 1 and arr.size == 0:
        raise ValueError("population is empty")
    if arr.ndim != 2:
        raise ValueError(f"population must be 2-D (M, d), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("population is empty")
    if arr.shape[1] < 1:
        raise ValueError("population dimension must be >= 1")
    return _check_bits(arr)


def as_theta(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"theta must be 1-D with d >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta entries must be finite")
    return arr


def _check_dim(theta: np.ndarray, d: int) -> None:
    if theta.shape[0] != d:
        raise ValueError(f"dimension mismatch: theta has {theta.shape[0]}, motif has {d}")


def fitness(theta, x) -> float:
    """Linear utility ``<theta, x>``."""
    theta, x = as_theta(theta), as_motif(x)
    _check_dim(theta, x.shape[0])
    return float(theta @ x)


def population_fitness(theta, S) -> float:
    """Mean utility over the members of ``S`` (duplicates counted)."""
    theta, S = as_theta(theta), as_population(S)
    _check_dim(theta, S.shape[1])
    return float(np.mean(S @ theta))


def optimum_value(theta) -> float:
    theta = as_theta(theta)
    return float(np.sum(np.maximum(theta, 0.0)))


def optimum_point(theta) -> np.ndarray:
    # zero-weight sites resolve to 1, same branch as favored_ratio
    theta = as_theta(theta)
    return (theta >= 0).astype(np.uint8)


def favored_ratio(theta, S) -> np.ndarray:
    """Per-site fraction of members carrying the bit value ``theta`` rewards.

    Sites with ``theta_i >= 0`` favour 1, sites with ``theta_i < 0`` favour 0.
    """
    theta, S = as_theta(theta), as_population(S)
    _check_dim(theta, S.shape[1])
    ones = S.mean(axis=0)
    return np.where(theta >= 0, ones, 1.0 - ones)


def site_variance(S) -> np.ndarray:
    """Population (divide-by-M) variance of each bit; in ``[0, 0.25]``."""
    S = as_population(S)
    q = S.mean(axis=0)
    return q * (1.0 - q)


def suboptimality_gap(theta, S) -> float:
    """``optimum_value(theta) - population_fitness(theta, S)``."""
    return optimum_value(theta) - population_fitness(theta, S)


def suboptimality_gap_from_ratio(theta, S) -> float:
    """Same gap via ``sum_i |theta_i| (1 - p_i(S))``."""
    theta = as_theta(theta)
    p = favored_ratio(theta, S)
    return float(np.sum(np.abs(theta) * (1.0 - p)))
