"""Distribution of the summed output of dependent wind farms.

Each farm output is a mixed law (atoms at zero and rated power plus a ramp
density).  Pairs are joined with a copula and their sum is obtained in closed
form up to one-dimensional integrals; Monte Carlo sampling serves as the
reference.
"""

from .config import ScenarioConfig, default_scenario, load_scenario
from .copulas import Gumbel, Independence, kendall_tau, make_copula
from .errors import (
    AccuracyError,
    ConfigError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    UnsupportedShapeError,
)
from .gmm import GmmApprox, fit_gmm
from .marginals import FarmOutput, GumbelMax, PowerCurve, Weibull, farm_output_distribution
from .mixed import MixedDistribution
from .multifarm import aggregate_recursive, critical_points
from .pairsum import SumOptions, SumResult, impulse_sizes, sum_distribution

__all__ = [
    "AccuracyError", "ConfigError", "ConstructionError", "ConvergenceError", "DomainError",
    "FarmOutput", "GmmApprox", "Gumbel", "GumbelMax", "Independence", "MixedDistribution",
    "PowerCurve", "ScenarioConfig", "SumOptions", "SumResult", "UnsupportedShapeError",
    "Weibull", "aggregate_recursive", "critical_points", "default_scenario", "farm_output_distribution",
    "fit_gmm", "impulse_sizes", "kendall_tau", "load_scenario", "make_copula", "sum_distribution",
]
