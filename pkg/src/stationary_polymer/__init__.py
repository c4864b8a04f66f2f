"""Monte Carlo simulation of the stationary semi-discrete (O'Connell-Yor) polymer.

The modules build on each other in this order: ``special`` (polygamma, Hermite),
``grid`` (time grids and Brownian environments), ``partition`` (log-space
partition functions), ``gibbs`` (quenched statistics of the first jump),
``cumulants`` (set partitions and the cumulant expansion), ``ensemble``
(Monte Carlo checks) and ``cli``.
"""

__version__ = "0.1.0"

from .grid import Environment, TimeGrid, make_grid, sample_environment, zero_environment
from .partition import burke_increments, log_point_to_point, log_stationary
from .gibbs import backward_profiles, quenched_cumulants, quenched_moment
from .ensemble import RunConfig, fit_exponents, run_all_checks, run_ensemble

__all__ = [
    "Environment", "TimeGrid", "make_grid", "sample_environment", "zero_environment",
    "burke_increments", "log_point_to_point", "log_stationary",
    "backward_profiles", "quenched_cumulants", "quenched_moment",
    "RunConfig", "fit_exponents", "run_all_checks", "run_ensemble",
]
