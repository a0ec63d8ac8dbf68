"""Monte-Carlo check of the primal distance bound for averaged iterates."""

from dataclasses import dataclass

import numpy as np

from .core import InsufficientSeeds


@dataclass(frozen=True)
class BoundReport:
    """Seed-averaged sides of ``E||y~ - y*||^2 <= (2/sigma_f)(D* - E D(mu~))``.

    Every array has one entry per outer stage; ``stderr`` is the standard
    error of the left side and ``slack`` the multiple of it allowed.
    """

    lhs: np.ndarray
    rhs: np.ndarray
    stderr: np.ndarray
    slack: float
    holds: np.ndarray

    @property
    def all_hold(self):
        return bool(np.all(self.holds))


def primal_bound_check(split, traces, oracle_solution, slack=3.0):
    """Compare both sides of the primal distance bound stage by stage.

    Parameters
    ----------
    split : SplitProblem
    traces : sequence of SolverTrace
        One per seed, produced with ``keep_iterates=True`` so that the
        per-stage primals ``y`` are available.
    oracle_solution : OracleSolution
        Its objective is ``D(mu*)`` by strong duality.
    slack : float
        Standard errors of Monte-Carlo tolerance on the comparison.

    Raises
    ------
    InsufficientSeeds
        With fewer than two traces.
    """
    if len(traces) < 2:
        raise InsufficientSeeds("the bound is an expectation; need at least 2 seeds")
    stages = min(len(t.y) for t in traces)
    if stages == 0:
        raise ValueError("traces carry no iterates; run with keep_iterates=True")
    y_star = oracle_solution.y_star
    dist = np.array([[np.sum((t.y[s] - y_star) ** 2) for s in range(stages)]
                     for t in traces])
    dual = np.array([t.dual_value[:stages] for t in traces], dtype=float)
    lhs = dist.mean(axis=0)
    stderr = dist.std(axis=0, ddof=1) / np.sqrt(len(traces))
    gap = oracle_solution.objective - dual.mean(axis=0)
    rhs = 2.0 / split.sigma_f * gap
    holds = lhs <= rhs + slack * stderr
    return BoundReport(lhs=lhs, rhs=rhs, stderr=stderr, slack=slack, holds=holds)
