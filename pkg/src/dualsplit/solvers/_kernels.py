"""Compiled inner loops for the horizon-split dual solvers.

Dual layout: ``w[t-1]`` and ``v[t-1]`` hold w_t and v_t for t = 1..N,
``lam[t]`` holds lambda_t for t = 0..N. Primal ``Y[t] = [x_t, u_t]`` with
``Y[0, :n] = x_init``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def stage_solve(t, w, v, lam, maps, x_init, out):
    """Closed-form minimizer of stage ``t`` given the current multipliers.

    ``maps`` = (Mw, Mv, Ml, MwN, MlN, M0v, M0l): prefactored products of
    the inverse stage Hessian with H1', H2' and -G'.
    """
    Mw, Mv, Ml, MwN, MlN, M0v, M0l = maps
    N = lam.shape[0] - 1
    n = x_init.shape[0]
    p = lam.shape[1]
    if t == 0:
        m = M0v.shape[0]
        for j in range(n):
            out[j] = x_init[j]
        for j in range(m):
            acc = 0.0
            for k in range(n):
                acc += M0v[j, k] * v[0, k]
            for k in range(p):
                acc += M0l[j, k] * lam[0, k]
            out[n + j] = acc
    elif t == N:
        for j in range(out.shape[0]):
            acc = 0.0
            for k in range(n):
                acc += MwN[j, k] * w[t - 1, k]
            for k in range(p):
                acc += MlN[j, k] * lam[t, k]
            out[j] = acc
    else:
        for j in range(out.shape[0]):
            acc = 0.0
            for k in range(n):
                acc += Mw[j, k] * w[t - 1, k] + Mv[j, k] * v[t, k]
            for k in range(p):
                acc += Ml[j, k] * lam[t, k]
            out[j] = acc


@njit(cache=True)
def solve_all(w, v, lam, maps, x_init, Y):
    for t in range(Y.shape[0]):
        stage_solve(t, w, v, lam, maps, x_init, Y[t])


@njit(cache=True)
def predictions(Y, H2, G, d, a, b, c):
    """Row values of the dual gradient: a_t = x_t, b_t = H2 y_{t-1}, c_t = G y_t - d."""
    N = Y.shape[0] - 1
    n = a.shape[1]
    nm = Y.shape[1]
    for t in range(1, N + 1):
        for j in range(n):
            a[t - 1, j] = Y[t, j]
            acc = 0.0
            for k in range(nm):
                acc += H2[j, k] * Y[t - 1, k]
            b[t - 1, j] = acc
    for t in range(N + 1):
        for j in range(G.shape[0]):
            acc = 0.0
            for k in range(nm):
                acc += G[j, k] * Y[t, k]
            c[t, j] = acc - d[j]


@njit(cache=True)
def prox_consensus(w, v, t, a_t, b_t, tau):
    """Dual step on (w_t, v_t) after minimizing over the consensus z_t."""
    # z = (a + b)/2 - (w + v)/(2 tau) substituted into w += tau (z - a)
    half_tau = 0.5 * tau
    for j in range(w.shape[1]):
        s = 0.5 * (w[t - 1, j] + v[t - 1, j])
        g = half_tau * (b_t[j] - a_t[j])
        w[t - 1, j] += g - s
        v[t - 1, j] += -g - s


@njit(cache=True)
def prox_slack(lam, t, c_t, tau):
    """Dual step on lambda_t after projecting the slack sigma_t onto >= 0."""
    # sigma = max(-c - lambda/tau, 0) substituted into lambda += tau (c + sigma)
    for j in range(lam.shape[1]):
        x = lam[t, j] + tau * c_t[j]
        lam[t, j] = x if x > 0.0 else 0.0


@njit(cache=True)
def prox_all(w, v, lam, a, b, c, tau):
    N = lam.shape[0] - 1
    for t in range(1, N + 1):
        prox_consensus(w, v, t, a[t - 1], b[t - 1], tau)
    for t in range(N + 1):
        prox_slack(lam, t, c[t], tau)


@njit(cache=True)
def _accumulate(total, x):
    for r in range(x.shape[0]):
        for j in range(x.shape[1]):
            total[r, j] += x[r, j]


@njit(cache=True)
def svr_epoch(w, v, lam, Y, Ysnap, a0, b0, c0, idx, probs, tau, maps,
              x_init, H2, G, full, latest_neighbor, w_sum, v_sum, lam_sum,
              lam_prev):
    """One outer stage of variance-reduced AMA on the split dual.

    ``a0, b0, c0`` are the snapshot gradient rows at the snapshot primal
    ``Ysnap``. With ``full`` every block takes a proximal step along the
    variance-reduced direction (snapshot gradient plus the sampled stage's
    correction divided by its probability); otherwise only the block
    (w_i, v_i, lambda_i) of the sampled stage moves. Running sums of the
    duals are accumulated for averaging; ``lam_prev`` receives the
    multipliers before the last inner iteration.
    """
    N = lam.shape[0] - 1
    n = x_init.shape[0]
    nm = Y.shape[1]
    p = lam.shape[1]
    a = a0.copy()
    b = b0.copy()
    c = c0.copy()
    y_i = np.empty(nm)
    diff = np.empty(nm)
    a_i = np.empty(n)
    b_i = np.empty(n)
    c_i = np.empty(p)
    T = idx.shape[0]
    for k in range(T):
        i = idx[k]
        if k == T - 1:
            lam_prev[:, :] = lam
        stage_solve(i, w, v, lam, maps, x_init, y_i)
        inv = 1.0 / probs[i]
        for j in range(nm):
            Y[i, j] = y_i[j]
            diff[j] = y_i[j] - Ysnap[i, j]
        if full:
            if i >= 1:
                for j in range(n):
                    a[i - 1, j] = a0[i - 1, j] + diff[j] * inv
            if i <= N - 1:
                for j in range(n):
                    acc = 0.0
                    for q in range(nm):
                        acc += H2[j, q] * diff[q]
                    b[i, j] = b0[i, j] + acc * inv
            for j in range(p):
                acc = 0.0
                for q in range(nm):
                    acc += G[j, q] * diff[q]
                c[i, j] = c0[i, j] + acc * inv
            prox_all(w, v, lam, a, b, c, tau)
            # restore the snapshot rows touched by this sample
            if i >= 1:
                for j in range(n):
                    a[i - 1, j] = a0[i - 1, j]
            if i <= N - 1:
                for j in range(n):
                    b[i, j] = b0[i, j]
            for j in range(p):
                c[i, j] = c0[i, j]
        else:
            if i >= 1:
                for j in range(n):
                    a_i[j] = a0[i - 1, j] + diff[j] * inv
                for j in range(n):
                    acc = 0.0
                    if latest_neighbor:
                        for q in range(nm):
                            acc += H2[j, q] * (Y[i - 1, q] - Ysnap[i - 1, q])
                    b_i[j] = b0[i - 1, j] + acc * inv
                prox_consensus(w, v, i, a_i, b_i, tau)
            for j in range(p):
                acc = 0.0
                for q in range(nm):
                    acc += G[j, q] * diff[q]
                c_i[j] = c0[i, j] + acc * inv
            prox_slack(lam, i, c_i, tau)
        _accumulate(w_sum, w)
        _accumulate(v_sum, v)
        _accumulate(lam_sum, lam)
