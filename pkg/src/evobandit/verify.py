"""Self-check suite behind ``evobandit verify``.

Each check compares production code against an oracle or a proven property
and returns ``(passed, detail)``. Report-only checks are printed but never
change the exit status.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from evobandit.bayes import posterior_ingest, posterior_init, posterior_mean
from evobandit.core import PriorSpec, favored_ratio, optimum_value, population_fitness, suboptimality_gap
from evobandit.evolution import directed_mutation, make_stream, sample_accepted_children
from evobandit.oracle import ascent_lower_bounds, dense_ridge, exact_crossover_selection_mean, exhaustive_optimum

LEVELS = {
    # instances, Monte Carlo samples per instance, ridge datasets, mutation calls
    "fast": dict(instances=40, samples=20_000, datasets=100, calls=300),
    "full": dict(instances=200, samples=100_000, datasets=1000, calls=1000),
}


@dataclass
class Check:
    name: str
    run: Callable[[dict, np.random.Generator], tuple[bool, str]]
    hard: bool = True


def random_instance(rng: np.random.Generator, max_d: int = 8, max_M: int = 6, distinct: bool = True):
    """``theta ~ N(0, I)`` and a random population small enough to enumerate.

    With ``distinct`` the members are drawn without replacement from the
    cube. The ascent bounds only hold for such sets: repeated members make
    resampling favour identical-parent pairs, which can pull the accepted
    mean below the bound (and even below ``F(S)``).
    """
    d = int(rng.integers(1, max_d + 1))
    theta = rng.standard_normal(d)
    if distinct:
        M = int(rng.integers(1, min(max_M, 2 ** d) + 1))
        codes = rng.choice(2 ** d, size=M, replace=False)
        S = ((codes[:, None] >> np.arange(d - 1, -1, -1)) & 1).astype(np.uint8)
    else:
        M = int(rng.integers(1, max_M + 1))
        S = rng.integers(0, 2, size=(M, d), dtype=np.uint8)
    return theta, S


def _instances(n: int, rng: np.random.Generator):
    return [random_instance(rng) for _ in range(n)]


def check_selection_oracle(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    n, samples = level["instances"], level["samples"]
    inside = 0
    for theta, S in _instances(n, rng):
        exact = exact_crossover_selection_mean(theta, S).expected_accepted_fitness
        kids = sample_accepted_children(theta, S, samples, rng)
        f = kids @ theta
        se = f.std(ddof=1) / math.sqrt(samples)
        inside += abs(f.mean() - exact) <= 3 * se + 1e-12
    need = math.ceil(0.975 * n)
    return inside >= need, f"{inside}/{n} within 3 SE (need {need})"


def check_safe_ascent(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    violations, n = 0, level["instances"]
    for theta, S in _instances(n, rng):
        gain = exact_crossover_selection_mean(theta, S).expected_accepted_fitness - population_fitness(theta, S)
        violations += gain < 0.5 * max(ascent_lower_bounds(theta, S)) - 1e-12
    return violations == 0, f"{violations} violations of halved bound in {n}"


def check_sampled_ascent(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    """Production sampler must realise the halved ascent bound (within 3 SE)."""
    violations, n = 0, level["instances"]
    samples = level["samples"]
    for theta, S in _instances(n, rng):
        f = sample_accepted_children(theta, S, samples, rng) @ theta
        se = f.std(ddof=1) / math.sqrt(samples)
        gain = f.mean() - population_fitness(theta, S)
        violations += gain < 0.5 * max(ascent_lower_bounds(theta, S)) - 3 * se - 1e-12
    return violations == 0, f"{violations} violations in {n}"


def check_linear_convergence(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    violations, tested = 0, 0
    while tested < level["instances"]:
        theta, S = random_instance(rng)
        p = favored_ratio(theta, S)
        if p.min() <= 0:
            continue
        tested += 1
        gain = exact_crossover_selection_mean(theta, S).expected_accepted_fitness - population_fitness(theta, S)
        eta = p.min() / math.sqrt(2 * len(theta))
        violations += gain < 0.5 * eta * suboptimality_gap(theta, S) - 1e-12
    return violations == 0, f"{violations} violations in {tested}"


def check_posterior(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(level["datasets"]):
        d = int(rng.integers(1, 11))
        n = int(rng.integers(0, 201))
        prior = PriorSpec(lam=float(rng.uniform(0.1, 5)), sigma=float(rng.uniform(0.2, 3)))
        X = rng.integers(0, 2, size=(n, d)).astype(float)
        u = rng.standard_normal(n) * 3
        state = posterior_ingest(posterior_init(d, prior), X, u)
        mean, precision = dense_ridge(X, u, d, prior)
        err_m = np.linalg.norm(posterior_mean(state) - mean) / max(np.linalg.norm(mean), 1e-300)
        err_p = np.linalg.norm(state.precision - precision) / np.linalg.norm(precision)
        worst = max(worst, err_p, err_m if np.linalg.norm(mean) > 0 else 0.0)
    return worst <= 1e-8, f"max relative error {worst:.2e}"


def check_directed_mutation(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    d, M, mu = 6, 40, 0.8
    theta = np.array([1.0, -1.0, 2.0, -0.5, 0.3, -2.0])
    S = rng.integers(0, 2, size=(M, d), dtype=np.uint8)
    p0 = favored_ratio(theta, S)
    calls = level["calls"]
    ps = np.stack([favored_ratio(theta, directed_mutation(theta, S, mu, rng)) for _ in range(calls)])
    expected = np.where(p0 <= 0.5, p0 + (0.5 - p0) * mu, p0)
    # per-site Bernoulli(mu/2)-style variance of the mean, never zero
    sd = np.sqrt(np.maximum(ps.var(axis=0, ddof=1), 1e-12) / calls)
    ok = np.abs(ps.mean(axis=0) - expected) <= 3 * sd + 1e-12
    return bool(ok.all()), f"{int(ok.sum())}/{d} sites within 3 SE"


def check_optimum(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    bad = 0
    n = level["instances"]
    for _ in range(n):
        theta = rng.standard_normal(int(rng.integers(1, 13)))
        value, _ = exhaustive_optimum(theta)
        bad += abs(value - optimum_value(theta)) > 1e-12 * max(1.0, abs(value))
    return bad == 0, f"{bad} mismatches in {n}"


def check_paper_constant(level: dict, rng: np.random.Generator) -> tuple[bool, str]:
    """Unhalved ascent constant; known to fail on some instances."""
    violations, n = 0, level["instances"]
    for theta, S in _instances(n, rng):
        gain = exact_crossover_selection_mean(theta, S).expected_accepted_fitness - population_fitness(theta, S)
        violations += gain < max(ascent_lower_bounds(theta, S)) - 1e-12
    worked = exact_crossover_selection_mean([1.0, 1.0], [[0, 0], [1, 1]]).expected_accepted_fitness - 1.0
    return violations == 0, f"{violations} violations in {n}; worked instance gain {worked:.4f} vs bound 0.25"


CHECKS = [
    Check("selection matches exact oracle", check_selection_oracle),
    Check("exact gain >= halved ascent bound", check_safe_ascent),
    Check("sampled gain >= halved ascent bound", check_sampled_ascent),
    Check("linear convergence direction", check_linear_convergence),
    Check("posterior matches dense ridge", check_posterior),
    Check("directed mutation law", check_directed_mutation),
    Check("optimum matches exhaustive scan", check_optimum),
    Check("full ascent constant (report only)", check_paper_constant, hard=False),
]


def run_checks(level: str = "fast", seed: int = 0, echo: Callable[[str], None] = print) -> bool:
    """Run every check, print a table, return True iff all hard checks pass."""
    params = LEVELS[level]
    all_ok = True
    echo(f"{'status':<8} {'check':<40} {'secs':>6}  detail")
    for k, check in enumerate(CHECKS):
        rng = make_stream(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        t0 = time.perf_counter()
        passed, detail = check.run(params, rng)
        secs = time.perf_counter() - t0
        if passed:
            status = "PASS"
        elif check.hard:
            status = "FAIL"
            all_ok = False
        else:
            status = "REPORT"
        echo(f"{status:<8} {check.name:<40} {secs:6.1f}  {detail}")
    return all_ok
