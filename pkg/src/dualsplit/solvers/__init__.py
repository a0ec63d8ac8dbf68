"""AMA, Prox-SVRG and variance-reduced stochastic AMA."""

from .ama import (AmaProblem, ama_generic_solve, ama_solve, split_as_ama_problem,
                  svr_ama_solve)
from .certificates import BoundReport, primal_bound_check
from .constants import (Constants, certified_step, compute_constants, compute_rho,
                        stages_for_gap)
from .core import (DualVars, InsufficientSeeds, NonFiniteIterate, SolverConfig,
                   SolverTrace, StageOperators, StepTooLarge, dual_surrogate,
                   dual_value, init_duals, is_dual_feasible)
from .split import correction_direction, svr_ama_split_solve
from .svrg import CompositeProblem, prox_svrg_solve, variance_reduced_direction

__all__ = [
    "AmaProblem", "BoundReport", "CompositeProblem", "Constants", "DualVars",
    "InsufficientSeeds", "NonFiniteIterate", "SolverConfig", "SolverTrace",
    "StageOperators", "StepTooLarge", "ama_generic_solve", "ama_solve",
    "certified_step", "compute_constants", "compute_rho", "correction_direction",
    "dual_surrogate", "dual_value", "init_duals", "is_dual_feasible",
    "primal_bound_check", "prox_svrg_solve", "split_as_ama_problem",
    "stages_for_gap", "svr_ama_solve", "svr_ama_split_solve",
    "variance_reduced_direction",
]
