"""Phase transition of a branching random walk confined between two barriers.

Spectral bounds from banded 0-1 Toeplitz matrices, coupled Monte Carlo
simulation of the sandwiching processes, and the discrete-space model.
"""

__version__ = "0.1.0"

from .point_process import Interval, PointSet, RngStream, sample_poisson, sample_ppp
from .spectral import (
    BandedToeplitz,
    BoundsRow,
    ConvergenceError,
    PerronResult,
    bounds_table,
    courant_fischer_check,
    lambda_c_x,
    lambda_c_z,
    matvec,
    perron,
)
from .survival import SurvivalEstimate, wilson_interval
from .continuous import (
    CoupledParticle,
    Partition,
    empirical_mean_matrix,
    estimate_survival,
    evolve,
    offspring_coupled,
    offspring_y,
    type_index,
)
from .discrete import (
    OccupancyVector,
    TrinomialRow,
    estimate_discrete_survival,
    exact_critical,
    exact_critical_diagnostics,
    expected_count,
    phase_diagram,
    step_discrete,
    trinomial_row,
)

__all__ = [
    "BandedToeplitz",
    "BoundsRow",
    "ConvergenceError",
    "CoupledParticle",
    "Interval",
    "OccupancyVector",
    "Partition",
    "PerronResult",
    "PointSet",
    "RngStream",
    "SurvivalEstimate",
    "TrinomialRow",
    "bounds_table",
    "courant_fischer_check",
    "empirical_mean_matrix",
    "estimate_discrete_survival",
    "estimate_survival",
    "evolve",
    "exact_critical",
    "exact_critical_diagnostics",
    "expected_count",
    "lambda_c_x",
    "lambda_c_z",
    "matvec",
    "offspring_coupled",
    "offspring_y",
    "perron",
    "phase_diagram",
    "sample_poisson",
    "sample_ppp",
    "step_discrete",
    "trinomial_row",
    "type_index",
    "wilson_interval",
]
