"""Variance-reduced stochastic AMA specialised to the horizon split.

One inner iteration samples a stage ``i``, solves that stage in closed
form at the current multipliers and corrects the snapshot dual gradient by
``(y_i - y~_i) / pi_i``. In ``"full"`` update mode the corrected rows are
those stage ``i`` touches (w_i, v_{i+1}, lambda_i) and every block then
takes the consensus and slack minimizations and the dual step as in AMA.
In ``"block"`` mode only (w_i, v_i, lambda_i) move, with the v_i
correction read from the stored y_{i-1}. All stage solves reuse the
Cholesky factors of the stage Hessians computed once per problem.
"""

import math

import numpy as np

from ..sampling import Distribution, Rng, adapt, indices_from_uniforms
from . import _kernels
from .constants import compute_constants
from .core import (NonFiniteIterate, SolverTrace, StageOperators, StepTooLarge,
                   DualVars, init_duals, primal_from_y, record)


def svr_ama_split_solve(split, config, duals0=None):
    """Solve the split MPC problem with variance-reduced stochastic AMA.

    Parameters
    ----------
    split : SplitProblem
    config : SolverConfig
        ``tau``, ``T`` (inner iterations per outer stage), ``s_bar`` (outer
        stages), the sampling distribution and its adaptation, ``seed`` and
        ``update`` mode.
    duals0 : DualVars, optional
        Starting multipliers; zero (a feasible start) by default.

    Returns
    -------
    primal : PrimalVars
        Stage minimizers at the final averaged multipliers.
    duals : DualVars
        Averaged multipliers of the last outer stage.
    trace : SolverTrace
        One record per outer stage.
    """
    N = split.N
    dist = config.make_distribution(N)
    consts = compute_constants(split, dist)
    tau, T = config.tau, config.T
    if config.check_step and 4.0 * tau * consts.L_star >= 1.0:
        raise StepTooLarge(
            f"tau = {tau:g} must be below 1/(4 L*) = {1 / (4 * consts.L_star):g}")
    ops = StageOperators(split)
    rng = Rng(config.seed)
    full = config.update == "full"
    latest = config.neighbor == "latest"

    mu_tilde = init_duals(split) if duals0 is None else duals0.copy()
    Ysnap = ops.primal(mu_tilde)
    snapshot = mu_tilde
    alpha, best = 1.0, -math.inf
    trace = SolverTrace()
    Y = Ysnap.copy()
    lam_prev = np.empty_like(mu_tilde.lam)
    for s in range(config.s_bar):
        a0, b0, c0 = ops.gradient_rows(Ysnap)
        mu = snapshot.copy()
        Y = Ysnap.copy()
        idx = indices_from_uniforms(dist.probs, rng.uniforms(T))
        w_sum = np.zeros_like(mu.w)
        v_sum = np.zeros_like(mu.v)
        lam_sum = np.zeros_like(mu.lam)
        _kernels.svr_epoch(mu.w, mu.v, mu.lam, Y, Ysnap, a0, b0, c0,
                           idx, dist.probs, tau, ops.maps, ops.x_init,
                           ops.H2, ops.G, full, latest,
                           w_sum, v_sum, lam_sum, lam_prev)
        new = DualVars(w_sum / T, v_sum / T, lam_sum / T)
        if not new.is_finite():
            raise NonFiniteIterate(f"multipliers became non-finite at stage {s}")
        Ynew = ops.primal(new)
        record(trace, split, new, Ynew, config)
        trace.counts.append(np.bincount(idx, minlength=N + 1))

        if config.adaptive:
            change = np.sum((new.lam - mu_tilde.lam) ** 2, axis=1)
            updated = adapt(dist, change, config.adapt_threshold,
                            config.prob_floor)
            if updated is not dist:
                trace.adaptations.append(
                    (s, np.flatnonzero(change < config.adapt_threshold).tolist()))
            dist = updated

        if config.accelerate:
            value = trace.dual_value[-1]
            if not value >= best:
                alpha = 1.0
                snapshot = new
                trace.restarts.append(s)
            else:
                nxt = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * alpha * alpha))
                snapshot = new + (new - mu_tilde).scale((alpha - 1.0) / nxt)
                alpha = nxt
            best = value
            Ysnap = ops.primal(snapshot) if snapshot is not new else Ynew
        else:
            snapshot = new
            Ysnap = Ynew
        mu_tilde = new
        Yout = Ynew

    trace.y_last = Y
    trace.probs = dist.probs
    return primal_from_y(split, Yout), mu_tilde, trace


def correction_direction(split, ops, i, mu, Ysnap, probs):
    """Variance-reduced correction of the dual gradient for stage ``i``.

    Returns the stacked vector ``Hy_i (y_i(mu) - y~_i) / pi_i`` in the row
    order of :meth:`DualVars.stack`, with ``y~ = Ysnap``.
    """
    y_i = np.empty(Ysnap.shape[1])
    _kernels.stage_solve(i, mu.w, mu.v, mu.lam, ops.maps, ops.x_init, y_i)
    diff = y_i - Ysnap[i]
    block = split.stage_block(i)
    if i == 0:
        diff = diff[split.n:]
    out = np.zeros(split.Hy.shape[0])
    out[split.row_slices[i]] = block @ diff / probs[i]
    return out
