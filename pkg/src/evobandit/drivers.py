"""TS-DE main loop, the model-free basic-DE baseline, and regret accounting."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from evobandit.bayes import (
    PosteriorState,
    noisy_evaluate_many,
    posterior_ingest,
    posterior_init,
    posterior_sample,
    sample_prior_theta,
)
from evobandit.core import PriorSpec, as_theta, favored_ratio, optimum_value
from evobandit.evolution import (
    crossover_selection,
    derive_seed,
    directed_mutation,
    make_stream,
    mutate_population,
    row_fitness,
)

ALGORITHMS = ("tsde", "basic-de")
SCHEDULES = ("constant", "inverse-sqrt", "inverse", "zero")
INITS = ("zeros", "uniform")


@dataclass(frozen=True)
class MutationSchedule:
    """``mu_t = clamp(c * g(t), 0, 1)`` with ``g`` in ``{1, 1/sqrt(t), 1/t, 0}``."""

    kind: str = "constant"
    c: float = 0.8

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}; expected one of {SCHEDULES}")
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ValueError(f"schedule scale must be >= 0, got {self.c}")

    def rate(self, t: int) -> float:
        if self.kind == "constant":
            g = 1.0
        elif self.kind == "inverse-sqrt":
            g = 1.0 / math.sqrt(t)
        elif self.kind == "inverse":
            g = 1.0 / t
        else:
            g = 0.0
        return min(max(self.c * g, 0.0), 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 10
    M: int = 20
    T: int = 100
    mu: float = 0.8
    prior: PriorSpec = field(default_factory=PriorSpec)
    seed: int = 0
    algorithm: str = "tsde"
    schedule: MutationSchedule = field(default_factory=MutationSchedule)
    snapshot_every: int = 0
    init: str = "zeros"

    def __post_init__(self) -> None:
        for name in ("d", "M", "T"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not (0.0 < self.mu <= 1.0):
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INITS}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")


@dataclass
class TrialTrajectory:
    """Per-round record of one run; index ``k`` holds round ``t = k + 1``."""

    optimum: float
    initial_fitness: float
    mean_fitness: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    n_evals: np.ndarray
    min_favored_ratio: np.ndarray
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    posterior: PosteriorState | None = None

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, len(self.mean_fitness) + 1)

    def evals_to_fraction(self, fraction: float = 0.9) -> float:
        """Evaluations spent when mean fitness first reaches ``fraction * optimum``.

        Returns ``inf`` if the run never gets there.
        """
        target = fraction * self.optimum
        if self.initial_fitness >= target:
            return 0.0
        hit = np.flatnonzero(self.mean_fitness >= target)
        return float(self.n_evals[hit[0]]) if hit.size else math.inf


def _initial_population(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if config.init == "uniform":
        return rng.integers(0, 2, size=(config.M, config.d), dtype=np.uint8)
    return np.zeros((config.M, config.d), dtype=np.uint8)


class _Recorder:
    def __init__(self, config: ExperimentConfig, theta_star: np.ndarray, S0: np.ndarray):
        self.config = config
        self.theta_star = theta_star
        self.optimum = optimum_value(theta_star)
        self.initial_fitness = float(row_fitness(S0, theta_star).mean())
        T = config.T
        self.mean_fitness = np.empty(T)
        self.inst_regret = np.empty(T)
        self.n_evals = np.empty(T, dtype=np.int64)
        self.min_favored = np.full(T, np.nan)
        self.snapshots: dict[int, np.ndarray] = {}
        self._evals = 0

    def charge(self, X: np.ndarray) -> float:
        """Regret of evaluating every row of ``X`` under the hidden optimum."""
        self._evals += X.shape[0]
        return float(np.sum(self.optimum - row_fitness(X, self.theta_star)))

    def close_round(self, t: int, S: np.ndarray, regret: float) -> None:
        k = t - 1
        self.mean_fitness[k] = row_fitness(S, self.theta_star).mean()
        self.inst_regret[k] = regret
        self.n_evals[k] = self._evals
        every = self.config.snapshot_every
        if every and t % every == 0:
            self.snapshots[t] = S.copy()

    def finish(self, posterior: PosteriorState | None = None) -> TrialTrajectory:
        return TrialTrajectory(
            optimum=self.optimum,
            initial_fitness=self.initial_fitness,
            mean_fitness=self.mean_fitness,
            inst_regret=self.inst_regret,
            cum_regret=np.cumsum(self.inst_regret),
            n_evals=self.n_evals,
            min_favored_ratio=self.min_favored,
            snapshots=self.snapshots,
            posterior=posterior,
        )


def run_tsde(
    config: ExperimentConfig,
    theta_star,
    rng: np.random.Generator,
    keep_history: bool = False,
) -> TrialTrajectory:
    """One run of Thompson-sampling-guided directed evolution.

    Each round draws ``theta ~ posterior``, applies directed mutation and
    crossover selection under that draw, then measures every member of the
    new population and folds the batch into the posterior.
    """
    theta_star = as_theta(theta_star)
    if theta_star.shape[0] != config.d:
        raise ValueError(f"theta_star has dimension {theta_star.shape[0]}, config says {config.d}")
    sigma = config.prior.sigma
    S = _initial_population(config, rng)
    rec = _Recorder(config, theta_star, S)
    state = posterior_init(config.d, config.prior, keep_history=keep_history)
    for t in range(1, config.T + 1):
        theta_t = posterior_sample(state, rng)
        S_mut = directed_mutation(theta_t, S, config.mu, rng)
        rec.min_favored[t - 1] = favored_ratio(theta_t, S_mut).min()
        S = crossover_selection(theta_t, S_mut, rng)
        u = noisy_evaluate_many(theta_star, S, sigma, rng)
        state = posterior_ingest(state, S, u)
        rec.close_round(t, S, rec.charge(S))
    return rec.finish(state)


def _noisy_crossover_selection(
    S: np.ndarray,
    u_parents: np.ndarray,
    theta_star: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    rec: _Recorder,
) -> tuple[np.ndarray, float]:
    """Crossover selection judged by fresh noisy measurements of each child."""
    M, d = S.shape
    max_attempts = 1000 * M
    children = np.empty_like(S)
    filled, attempts, regret = 0, 0, 0.0
    while filled < M:
        if attempts >= max_attempts:
            raise RuntimeError(f"noisy selection exceeded {max_attempts} attempts with {filled}/{M} accepted")
        need = M - filled
        k = min(max(3 * need + 8, 32), max_attempts - attempts)
        i = rng.integers(0, M, size=k)
        j = rng.integers(0, M, size=k)
        from_x = rng.random((k, d)) < 0.5
        z = np.where(from_x, S[i], S[j])
        u_z = noisy_evaluate_many(theta_star, z, sigma, rng)
        hits = np.flatnonzero(u_z >= (u_parents[i] + u_parents[j]) / 2)[:need]
        used = int(hits[-1]) + 1 if hits.size == need else k
        attempts += used
        regret += rec.charge(z[:used])
        children[filled:filled + hits.size] = z[hits]
        filled += hits.size
    return children, regret


def run_basic_de(config: ExperimentConfig, theta_star, rng: np.random.Generator) -> TrialTrajectory:
    """Model-free baseline: uniform mutation, selection on raw noisy measurements.

    Every member is measured once per round after mutation; those values are
    reused as parent scores, and every candidate child costs one more
    measurement. All measurements are charged to regret.
    """
    theta_star = as_theta(theta_star)
    if theta_star.shape[0] != config.d:
        raise ValueError(f"theta_star has dimension {theta_star.shape[0]}, config says {config.d}")
    sigma = config.prior.sigma
    all_sites = range(config.d)
    S = _initial_population(config, rng)
    rec = _Recorder(config, theta_star, S)
    for t in range(1, config.T + 1):
        mu_t = config.schedule.rate(t)
        if mu_t > 0:
            S = mutate_population(S, all_sites, mu_t, rng)
        u_parents = noisy_evaluate_many(theta_star, S, sigma, rng)
        regret = rec.charge(S)
        S, child_regret = _noisy_crossover_selection(S, u_parents, theta_star, sigma, rng, rec)
        rec.close_round(t, S, regret + child_regret)
    return rec.finish()


def run_algorithm(config: ExperimentConfig, theta_star, rng: np.random.Generator) -> TrialTrajectory:
    if config.algorithm == "tsde":
        return run_tsde(config, theta_star, rng)
    return run_basic_de(config, theta_star, rng)


def trial_streams(master_seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """``(theta_star stream, algorithm stream)`` for one trial.

    ``theta_star`` has its own stream so arms compared at the same master
    seed face the same hidden utility.
    """
    return (
        make_stream(derive_seed(master_seed, trial, 0)),
        make_stream(derive_seed(master_seed, trial, 1)),
    )


def run_trial(config: ExperimentConfig, master_seed: int, trial: int) -> tuple[np.ndarray, TrialTrajectory]:
    theta_rng, algo_rng = trial_streams(master_seed, trial)
    theta_star = sample_prior_theta(config.d, config.prior, theta_rng)
    return theta_star, run_algorithm(config, theta_star, algo_rng)


def _run_trial_job(args):
    config, master_seed, trial = args
    return run_trial(config, master_seed, trial)[1]


def run_trials(config: ExperimentConfig, n_trials: int, master_seed: int, jobs: int = 1) -> list[TrialTrajectory]:
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    work = [(config, master_seed, k) for k in range(n_trials)]
    if jobs <= 1:
        return [_run_trial_job(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_trial_job, work))


@dataclass
class RegretEstimate:
    """Pointwise mean and standard error of per-member cumulative regret."""

    M: int
    mean: np.ndarray
    stderr: np.ndarray
    trajectories: list[TrialTrajectory]


def estimate_bayes_regret(
    config: ExperimentConfig,
    n_trials: int,
    master_seed: int | None = None,
    jobs: int = 1,
) -> RegretEstimate:
    """Monte Carlo estimate of Bayesian regret over the prior on ``theta_star``."""
    seed = config.seed if master_seed is None else master_seed
    trajs = run_trials(config, n_trials, seed, jobs=jobs)
    per_member = np.stack([tr.cum_regret for tr in trajs]) / config.M
    mean = per_member.mean(axis=0)
    if n_trials > 1:
        stderr = per_member.std(axis=0, ddof=1) / math.sqrt(n_trials)
    else:
        stderr = np.zeros_like(mean)
    return RegretEstimate(M=config.M, mean=mean, stderr=stderr, trajectories=trajs)
