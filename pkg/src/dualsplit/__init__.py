"""Time-split dual solvers for linear MPC with variance-reduced stochastic AMA."""

from .model import (MpcProblem, PrimalVars, SplitProblem, build_problem,
                    primal_objective, residuals, time_split)
from .oracle import OracleSolution, solve_reference, suboptimality
from .sampling import Distribution, Rng, adapt, make_distribution, sample

__version__ = "0.1.0"

__all__ = [
    "Distribution", "MpcProblem", "OracleSolution", "PrimalVars", "Rng",
    "SplitProblem", "adapt", "build_problem", "make_distribution",
    "primal_objective", "residuals", "sample", "solve_reference",
    "suboptimality", "time_split",
]
