"""Thompson-sampling-guided directed evolution over binary motif vectors."""

from evobandit.core import (
    PriorSpec,
    as_motif,
    as_population,
    as_theta,
    favored_ratio,
    fitness,
    optimum_point,
    optimum_value,
    population_fitness,
    site_variance,
    suboptimality_gap,
)

__version__ = "0.1.0"

__all__ = [
    "PriorSpec",
    "as_motif",
    "as_population",
    "as_theta",
    "favored_ratio",
    "fitness",
    "optimum_point",
    "optimum_value",
    "population_fitness",
    "site_variance",
    "suboptimality_gap",
]
