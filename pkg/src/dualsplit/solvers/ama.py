"""Alternating minimization (AMA) and its variance-reduced stochastic form.

AMA solves ``min f(y) + g(z) s.t. Hy y + Hz z = d`` with ``f`` strongly
convex by alternating an exact minimization in ``y``, a penalized
minimization in ``z`` and a dual ascent step. It coincides with proximal
gradient ascent on the dual ``D(mu) = -f*(Hy' mu) - g*(Hz' mu) + d' mu``.

Two entry points work on the horizon-split MPC problem with prefactored
stage operators (:func:`ama_solve`); the generic :class:`AmaProblem` path
(:func:`ama_generic_solve`, :func:`svr_ama_solve`) works with dense
matrices and arbitrary component splits.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import cholesky
from ..sampling import Rng, indices_from_uniforms
from .core import (NonFiniteIterate, SolverTrace, StageOperators, StepTooLarge,
                   init_duals, primal_from_y, record)


def _momentum(alpha):
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * alpha * alpha))


def ama_solve(split, config, duals0=None, iterations=None):
    """Synchronous AMA on the split MPC problem.

    Every iteration solves all stages in closed form, minimizes over the
    consensus variables and slacks, and takes a full dual step. With
    ``config.accelerate`` a FAMA-style momentum step is applied to the duals
    and reset whenever the dual value decreases.

    Parameters
    ----------
    split : SplitProblem
    config : SolverConfig
        Uses ``tau``, ``accelerate`` and ``check_step``.
    duals0 : DualVars, optional
        Starting multipliers (zero by default).
    iterations : int, optional
        Iteration count; defaults to ``config.s_bar``.

    Returns
    -------
    primal : PrimalVars
        Stage minimizers at the final multipliers.
    duals : DualVars
    trace : SolverTrace
        One record per iteration.
    """
    tau = config.tau
    limit = split.sigma_f / split.eig_max_Hy
    if config.check_step and tau >= limit:
        raise StepTooLarge(f"AMA needs tau < sigma_f/eig_max(Hy) = {limit:g}")
    K = config.s_bar if iterations is None else int(iterations)
    ops = StageOperators(split)
    mu = init_duals(split) if duals0 is None else duals0.copy()
    mu_hat = mu.copy()
    alpha = 1.0
    best = -math.inf
    trace = SolverTrace()
    Y = ops.primal(mu)
    for k in range(K):
        Yh = ops.primal(mu_hat) if config.accelerate else Y
        a, b, c = ops.gradient_rows(Yh)
        new = mu_hat.copy()
        ops.prox_step(new, a, b, c, tau)
        Y = ops.primal(new)
        record(trace, split, new, Y, config)
        if config.accelerate:
            value = trace.dual_value[-1]
            if value < best:
                alpha = 1.0
                mu_hat = new.copy()
                trace.restarts.append(k)
            else:
                nxt = _momentum(alpha)
                mu_hat = new + (new - mu).scale((alpha - 1.0) / nxt)
                alpha = nxt
            best = value
        else:
            mu_hat = new
        mu = new
    trace.y_last = Y
    return primal_from_y(split, Y), mu, trace


@dataclass
class AmaProblem:
    """``min sum_i f_i(y_i) + g(z)  s.t.  sum_i Hy_i y_i + Hz z = d``.

    Each ``f_i(y) = 1/2 y' P_i y + q_i' y`` with ``P_i`` SPD. ``zmin(mu, c,
    tau)`` returns ``argmin_z g(z) - <mu, Hz z> + tau/2 ||c - Hz z||^2`` and
    ``g_conj(s)`` evaluates ``g*(s)`` (``inf`` outside its domain).
    """

    Hy_blocks: list
    hessians: list
    Hz: np.ndarray
    d: np.ndarray
    zmin: object
    g_conj: object = None
    linear: list = None
    const: float = 0.0

    def __post_init__(self):
        self.factors = [cholesky(P) for P in self.hessians]
        if self.linear is None:
            self.linear = [np.zeros(P.shape[0]) for P in self.hessians]

    @property
    def n_components(self):
        return len(self.Hy_blocks)

    def component_primal(self, i, mu):
        return self.factors[i].solve(self.Hy_blocks[i].T @ mu - self.linear[i])

    def primal(self, mu):
        return [self.component_primal(i, mu) for i in range(self.n_components)]

    def gradient(self, ys):
        """``grad F(mu) = sum_i Hy_i y_i(mu)`` from the component minimizers."""
        return sum(H @ y for H, y in zip(self.Hy_blocks, ys))

    def dual(self, mu):
        """``const - sum_i f_i*(Hy_i' mu) - g*(Hz' mu) + d' mu``."""
        value = self.const + float(self.d @ mu)
        for i, y in enumerate(self.primal(mu)):
            value -= 0.5 * float(y @ self.hessians[i] @ y)
        if self.g_conj is not None:
            value -= self.g_conj(self.Hz.T @ mu)
        return value

    def step(self, mu, beta, tau):
        """Minimize over ``z`` and take the dual step along ``beta``."""
        c = self.d - beta
        z = self.zmin(mu, c, tau)
        return mu + tau * (c - self.Hz @ z), z


def ama_generic_solve(problem, tau, iterations, mu0=None):
    """Plain AMA on an :class:`AmaProblem`; returns the dual iterates."""
    mu = np.zeros(problem.Hz.shape[0]) if mu0 is None else np.array(mu0, float)
    history = []
    for _ in range(iterations):
        beta = problem.gradient(problem.primal(mu))
        mu, _ = problem.step(mu, beta, tau)
        history.append(mu.copy())
    return mu, history


def svr_ama_solve(problem, config, probs=None, mu0=None, record_inner=False):
    """Variance-reduced stochastic AMA on an :class:`AmaProblem`.

    Each outer stage fixes a snapshot ``mu~`` with full gradient ``beta~``;
    each of the ``T`` inner iterations samples a component ``i``, solves
    for ``y_i`` at the current multipliers, forms the direction
    ``beta~ + Hy_i (y_i - y~_i) / pi_i`` and takes the AMA step along it.
    The next snapshot is the average of the inner multipliers.

    Returns
    -------
    mu : ndarray
        Final averaged multipliers.
    ys : list of ndarray
        Component minimizers at ``mu``.
    trace : SolverTrace
        ``mu`` holds the averaged multipliers per stage (and every inner
        iterate in ``y`` when ``record_inner``).
    """
    M = problem.n_components
    probs = np.full(M, 1.0 / M) if probs is None else np.asarray(probs, float)
    rng = Rng(config.seed)
    tau, T = config.tau, config.T
    mu_tilde = np.zeros(problem.Hz.shape[0]) if mu0 is None else np.array(mu0, float)
    trace = SolverTrace()
    for s in range(config.s_bar):
        y_tilde = problem.primal(mu_tilde)
        beta_tilde = problem.gradient(y_tilde)
        mu = mu_tilde.copy()
        total = np.zeros_like(mu)
        idx = indices_from_uniforms(probs, rng.uniforms(T))
        for i in idx:
            y_i = problem.component_primal(i, mu)
            beta = beta_tilde + problem.Hy_blocks[i] @ (y_i - y_tilde[i]) / probs[i]
            mu, _ = problem.step(mu, beta, tau)
            total = total + mu
            if record_inner:
                trace.y.append(mu.copy())
        if not np.all(np.isfinite(mu)):
            raise NonFiniteIterate("dual iterate became non-finite")
        mu_tilde = total / T
        trace.mu.append(mu_tilde.copy())
        trace.counts.append(np.bincount(idx, minlength=M))
        if problem.g_conj is not None:
            trace.dual_value.append(problem.dual(mu_tilde))
    return mu_tilde, problem.primal(mu_tilde), trace


def split_as_ama_problem(split):
    """Dense :class:`AmaProblem` view of a split MPC problem.

    Components are the stage column blocks of ``Hy``. The ``z`` step uses
    that ``Hz' Hz`` is diagonal: the unconstrained minimizer is computed in
    closed form and the slack entries are clipped at zero.
    """
    N, n, p = split.N, split.n, split.p
    Hy, Hz = split.Hy, split.Hz
    blocks = [Hy[:, cols] for cols in split.col_slices]
    hessians = [split.problem.R] + [split.stage_data(t).Qcal
                                    for t in range(1, N + 1)]
    gram = np.sum(Hz * Hz, axis=0)
    slack = np.zeros(Hz.shape[1], dtype=bool)
    slack[N * n:] = True

    def zmin(mu, c, tau):
        z = (Hz.T @ (c + mu / tau)) / gram
        z[slack] = np.maximum(z[slack], 0.0)
        return z

    def g_conj(s):
        if np.max(np.abs(s[~slack]), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(s))):
            return math.inf
        if np.max(s[slack], initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(s))):
            return math.inf
        return 0.0

    return AmaProblem(Hy_blocks=blocks, hessians=hessians, Hz=Hz,
                      d=split.dbar, zmin=zmin, g_conj=g_conj,
                      const=split.const)
