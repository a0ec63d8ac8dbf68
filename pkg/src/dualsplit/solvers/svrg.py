"""Proximal stochastic gradient with variance reduction (Prox-SVRG)."""

from dataclasses import dataclass

import numpy as np

from ..sampling import Rng, indices_from_uniforms
from .core import NonFiniteIterate, SolverTrace, StepTooLarge


@dataclass
class CompositeProblem:
    """``min_y sum_t F_t(y) + G(y)``.

    Parameters
    ----------
    component_grad : callable
        ``component_grad(t, y)`` returns the gradient of ``F_t`` at ``y``.
    prox : callable
        ``prox(y, tau)`` evaluates the proximal operator of ``tau * G``.
    objective : callable
        ``objective(y)`` returns ``F(y) + G(y)``.
    sigma_F : float
        Strong convexity modulus of ``F``.
    lipschitz : array_like
        Lipschitz constants ``L_t`` of the component gradients.
    """

    component_grad: object
    prox: object
    objective: object
    sigma_F: float
    lipschitz: np.ndarray

    def __post_init__(self):
        self.lipschitz = np.asarray(self.lipschitz, dtype=float)
        if not self.sigma_F > 0 or np.any(self.lipschitz <= 0):
            raise ValueError("need sigma_F > 0 and positive Lipschitz constants")

    @property
    def n_components(self):
        return self.lipschitz.size

    def full_grad(self, y):
        return sum(self.component_grad(t, y) for t in range(self.n_components))


def prox_svrg_solve(problem, config, y0, probs=None):
    """Minimize a composite objective with Prox-SVRG.

    Every outer stage recomputes the full gradient at the snapshot ``y~``;
    inner iterations step along
    ``grad F(y~) + (grad F_i(y) - grad F_i(y~)) / pi_i`` followed by the
    proximal map. The next snapshot is the average of the ``T`` inner
    iterates.

    Raises
    ------
    StepTooLarge
        If ``tau >= 1 / (4 max_t L_t / pi_t)`` and ``config.check_step``.
    """
    M = problem.n_components
    probs = np.full(M, 1.0 / M) if probs is None else np.asarray(probs, float)
    L_pi = float(np.max(problem.lipschitz / probs))
    tau, T = config.tau, config.T
    if config.check_step and 4.0 * tau * L_pi >= 1.0:
        raise StepTooLarge(f"tau must be below 1/(4 L_pi) = {1 / (4 * L_pi):g}")
    rng = Rng(config.seed)
    y_tilde = np.array(y0, dtype=float)
    trace = SolverTrace()
    for s in range(config.s_bar):
        beta_tilde = problem.full_grad(y_tilde)
        y = y_tilde.copy()
        total = np.zeros_like(y)
        idx = indices_from_uniforms(probs, rng.uniforms(T))
        for i in idx:
            beta = variance_reduced_direction(problem, i, y, y_tilde,
                                              beta_tilde, probs)
            y = problem.prox(y - tau * beta, tau)
            total += y
        if not np.all(np.isfinite(y)):
            raise NonFiniteIterate("iterate became non-finite")
        y_tilde = total / T
        trace.primal_objective.append(float(problem.objective(y_tilde)))
        trace.counts.append(np.bincount(idx, minlength=M))
        if config.keep_iterates:
            trace.y.append(y_tilde.copy())
    return y_tilde, trace


def variance_reduced_direction(problem, i, y, y_tilde, beta_tilde, probs):
    """Direction used by one inner Prox-SVRG iteration for component ``i``."""
    return beta_tilde + (problem.component_grad(i, y)
                         - problem.component_grad(i, y_tilde)) / probs[i]
