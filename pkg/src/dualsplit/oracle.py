"""Reference solutions of the MPC problem by a primal-dual interior-point method.

The states are eliminated through the dynamics, leaving a dense QP in the
stacked inputs,

    min 1/2 U' H U + f' U   s.t.  Gc U <= h,

which is solved with Mehrotra's predictor-corrector method. Nothing here
depends on the first-order solvers; the multipliers of the split problem
are recovered afterwards from the costate recursion.
"""

from dataclasses import dataclass

import numpy as np

from .model import PrimalVars, primal_objective
from .numerics import DimensionMismatch, cholesky, NotPositiveDefinite

KKT_TOL = 1e-8


class Infeasible(RuntimeError):
    pass


class MaxIterations(RuntimeError):
    pass


@dataclass(frozen=True)
class CondensedQP:
    H: np.ndarray
    f: np.ndarray
    const: float
    G: np.ndarray
    h: np.ndarray
    Sx: np.ndarray   # X = Sx x_init + Su U
    Su: np.ndarray


@dataclass(frozen=True)
class OracleSolution:
    """Optimal primal ``y_star`` (N+1, n+m) and split multipliers."""

    y_star: np.ndarray
    w: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int

    @property
    def primal(self):
        return PrimalVars(y=self.y_star)

    def mu_star(self):
        """Multipliers stacked per stage as (w_t, v_{t+1}, lambda_t)."""
        N = self.lam.shape[0] - 1
        parts = []
        for t in range(N + 1):
            if t >= 1:
                parts.append(self.w[t - 1])
            if t <= N - 1:
                parts.append(self.v[t])
            parts.append(self.lam[t])
        return np.concatenate(parts)


def condense(prob):
    """Eliminate the states of an :class:`~dualsplit.model.MpcProblem`."""
    A, B, N = prob.A, prob.B, prob.N
    n, m, p = prob.n, prob.m, prob.p
    Sx = np.zeros(((N + 1) * n, n))
    Su = np.zeros(((N + 1) * n, (N + 1) * m))
    Sx[:n] = np.eye(n)
    for t in range(1, N + 1):
        rows = slice(t * n, (t + 1) * n)
        Sx[rows] = A @ Sx[(t - 1) * n:t * n]
        Su[rows] = A @ Su[(t - 1) * n:t * n]
        Su[rows, (t - 1) * m:t * m] = B
    Qbar = np.zeros(((N + 1) * n, (N + 1) * n))
    for t in range(N):
        Qbar[t * n:(t + 1) * n, t * n:(t + 1) * n] = prob.Q
    Qbar[N * n:, N * n:] = prob.terminal_weight
    Rbar = np.kron(np.eye(N + 1), prob.R)
    Cbar = np.kron(np.eye(N + 1), prob.C)
    Dbar = np.kron(np.eye(N + 1), prob.D)
    x0 = prob.x_init
    H = Su.T @ Qbar @ Su + Rbar
    H = 0.5 * (H + H.T)
    f = Su.T @ Qbar @ (Sx @ x0)
    const = 0.5 * float((Sx @ x0) @ Qbar @ (Sx @ x0))
    G = Cbar @ Su + Dbar
    h = np.tile(prob.d, N + 1) - Cbar @ (Sx @ x0)
    return CondensedQP(H, f, const, G, h, Sx, Su)


def _max_step(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-x[neg] / dx[neg])))


def _regularized_cholesky(K):
    # near the end, huge W = z/s can push K numerically indefinite
    shift = 0.0
    scale = float(np.max(np.diag(K)))
    for _ in range(8):
        try:
            return cholesky(K + shift * np.eye(K.shape[0]), pivot_tol=0.0)
        except NotPositiveDefinite:
            shift = 1e-14 * scale if shift == 0.0 else 100.0 * shift
    raise MaxIterations("KKT system lost definiteness")


def solve_qp(H, f, G, h, tol=KKT_TOL, maxiter=200):
    """Mehrotra predictor-corrector for ``min 1/2 x'Hx + f'x, Gx <= h``.

    Returns
    -------
    x, z : ndarray
        Primal solution and inequality multipliers (``z >= 0``).
    iterations : int
    """
    nv, nc = H.shape[0], G.shape[0]
    if nc == 0:
        return -cholesky(H).solve(f), np.zeros(0), 0
    # rows without decision variables (a stage-0 state bound) are checked and dropped
    constant = np.all(G == 0.0, axis=1)
    if np.any(constant):
        if np.any(h[constant] < -tol * problem_scale(H, f, h)):
            raise Infeasible("a constraint independent of the inputs is violated")
        z = np.zeros(nc)
        x, z[~constant], it = solve_qp(H, f, G[~constant], h[~constant], tol, maxiter)
        return x, z, it
    x = -cholesky(H).solve(f)
    s = np.maximum(h - G @ x, 1.0)
    z = np.ones(nc)
    scale = problem_scale(H, f, h)
    for it in range(1, maxiter + 1):
        r_d = H @ x + f + G.T @ z
        r_p = G @ x + s - h
        mu = float(s @ z) / nc
        if (np.max(np.abs(r_d)) <= tol * 1e-2 * scale
                and np.max(np.abs(r_p)) <= tol * 1e-2 * scale
                and mu <= tol * 1e-4):
            return x, z, it
        if np.max(z) > 1e14 * scale and np.max(np.abs(r_p)) > tol:
            raise Infeasible("inequality multipliers diverge: problem infeasible")
        W = z / s
        K = H + G.T @ (W[:, None] * G)
        factor = _regularized_cholesky(0.5 * (K + K.T))

        def direction(r_c):
            rhs = -r_d - G.T @ (W * r_p) + G.T @ (r_c / s)
            dx = factor.solve(rhs)
            dz = W * (G @ dx + r_p) - r_c / s
            ds = -(r_c + s * dz) / z
            return dx, ds, dz

        dx, ds, dz = direction(s * z)
        a_p, a_d = _max_step(s, ds), _max_step(z, dz)
        mu_aff = float((s + a_p * ds) @ (z + a_d * dz)) / nc
        sigma = (mu_aff / mu) ** 3
        dx, ds, dz = direction(s * z + ds * dz - sigma * mu)
        a_p = min(1.0, 0.99 * _max_step(s, ds))
        a_d = min(1.0, 0.99 * _max_step(z, dz))
        x = x + a_p * dx
        s = s + a_p * ds
        z = z + a_d * dz
    raise MaxIterations(f"interior point did not converge in {maxiter} iterations")


def problem_scale(H, f, h):
    """``1 + max(|H|, |f|, |h|)``; residual tolerances are relative to it."""
    return 1.0 + max(np.max(np.abs(H)), np.max(np.abs(f), initial=0.0),
                     np.max(np.abs(h), initial=0.0))


def kkt_residual(H, f, G, h, x, z):
    """Largest violation among stationarity, feasibility, sign and complementarity."""
    slack = h - G @ x
    return max(float(np.max(np.abs(H @ x + f + G.T @ z), initial=0.0)),
               float(np.max(-slack, initial=0.0)),
               float(np.max(-z, initial=0.0)),
               float(np.max(np.abs(z * slack), initial=0.0)))


def solve_reference(prob, kkt_tol=KKT_TOL, maxiter=200):
    """Solve the MPC problem to high accuracy.

    The KKT residual is accepted up to ``kkt_tol`` times
    :func:`problem_scale` of the condensed QP.

    Raises
    ------
    Infeasible
        If the constraints admit no feasible input sequence.
    MaxIterations
        If the interior-point method stalls.
    """
    qp = condense(prob)
    n, m, p, N = prob.n, prob.m, prob.p, prob.N
    U, z, iters = solve_qp(qp.H, qp.f, qp.G, qp.h, kkt_tol, maxiter)
    res = kkt_residual(qp.H, qp.f, qp.G, qp.h, U, z)
    limit = kkt_tol * problem_scale(qp.H, qp.f, qp.h)
    if res > limit:
        raise MaxIterations(f"KKT residual {res:.2e} above {limit:g}")
    X = (qp.Sx @ prob.x_init + qp.Su @ U).reshape(N + 1, n)
    Umat = U.reshape(N + 1, m)
    y = np.hstack([X, Umat])
    lam = z.reshape(N + 1, p)
    w, v = costates(prob, X, lam)
    return OracleSolution(y_star=y, w=w, v=v, lam=lam,
                          objective=primal_objective(prob, y),
                          kkt_residual=res, iterations=iters)


def costates(prob, X, lam):
    """Consensus multipliers (w, v) from the backward costate recursion."""
    N, n = prob.N, prob.n
    w, v = np.zeros((N, n)), np.zeros((N, n))
    w[N - 1] = prob.terminal_weight @ X[N] + prob.C.T @ lam[N]
    v[N - 1] = -w[N - 1]
    for t in range(N - 1, 0, -1):
        w[t - 1] = prob.Q @ X[t] - prob.A.T @ v[t] + prob.C.T @ lam[t]
        v[t - 1] = -w[t - 1]
    return w, v


def suboptimality(ref, vars, prob):
    """Objective gap and squared distance of ``vars`` to the optimum."""
    y = np.asarray(vars.y if isinstance(vars, PrimalVars) else vars, dtype=float)
    if y.shape != ref.y_star.shape:
        raise DimensionMismatch(f"y has shape {y.shape}, expected {ref.y_star.shape}")
    gap = primal_objective(prob, y) - ref.objective
    return gap, float(np.sum((y - ref.y_star) ** 2))
