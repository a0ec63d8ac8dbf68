"""Linear-quadratic MPC problems and their split along the horizon.

The MPC problem is

    min  1/2 sum_{t=0..N} x_t' Q x_t + u_t' R u_t
    s.t. x_{t+1} = A x_t + B u_t,   C x_t + D u_t <= d,   x_0 = x_init.

Splitting along the horizon gives every stage its own copy
``y_t = [x_t; u_t]`` coupled to its neighbours through consensus variables
``z_t`` (t = 1..N) and slacks ``sigma_t >= 0``. Row blocks, multipliers and
signs are

    w_t      (t = 1..N)     H1 y_t      - z_t     = 0
    v_t      (t = 1..N)     H2 y_{t-1}  - z_t     = 0
    lambda_t (t = 0..N)    -G  y_t      - sigma_t = -d

with ``H1 = [I 0]``, ``H2 = [A B]`` and ``G = [C D]``. Stage 0 has its state
fixed to ``x_init``, so its decision variable is ``u_0`` alone and the
constant parts move to the right-hand side. In the stacked form
``Hy y + Hz z = dbar`` the rows are grouped per stage column block in the
order (w_t, v_{t+1}, lambda_t), which makes ``Hy`` block diagonal.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import (CholeskyFactor, DimensionMismatch, cholesky,
                       extreme_singular_values)


def _matrix(x, name):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _vector(x, name):
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class MpcProblem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    d: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: int
    x_init: np.ndarray
    P: np.ndarray = None  # terminal weight, defaults to Q

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def terminal_weight(self):
        return self.Q if self.P is None else self.P

    def with_initial_state(self, x_init):
        """Copy of the problem regulating from a different initial state."""
        x_init = _vector(x_init, "x_init")
        if x_init.shape != (self.n,):
            raise DimensionMismatch("x_init has the wrong length")
        return MpcProblem(self.A, self.B, self.C, self.D, self.d, self.Q,
                          self.R, self.N, x_init, self.P)


def build_problem(A, B, C, D, d, Q, R, N, x_init, P=None):
    """Validate MPC data and return an :class:`MpcProblem`.

    Raises
    ------
    DimensionMismatch
        If the shapes are inconsistent or ``N < 1``.
    NotPositiveDefinite
        If ``Q``, ``R`` (or the terminal weight ``P``) is not SPD.
    """
    A, B, C, D, Q, R = (_matrix(M, name) for M, name in
                        zip((A, B, C, D, Q, R), "ABCDQR"))
    d = _vector(d, "d")
    x_init = _vector(x_init, "x_init")
    n, m, p = A.shape[0], B.shape[1], C.shape[0]
    expected = {"A": (A, (n, n)), "B": (B, (n, m)), "C": (C, (p, n)),
                "D": (D, (p, m)), "Q": (Q, (n, n)), "R": (R, (m, m))}
    for name, (M, shape) in expected.items():
        if M.shape != shape:
            raise DimensionMismatch(f"{name} has shape {M.shape}, expected {shape}")
    if d.shape != (p,):
        raise DimensionMismatch(f"d has length {d.size}, expected {p}")
    if x_init.shape != (n,):
        raise DimensionMismatch(f"x_init has length {x_init.size}, expected {n}")
    if int(N) != N or N < 1:
        raise DimensionMismatch(f"horizon N must be an integer >= 1, got {N}")
    cholesky(Q)
    cholesky(R)
    if P is not None:
        P = _matrix(P, "P")
        if P.shape != (n, n):
            raise DimensionMismatch(f"P has shape {P.shape}, expected {(n, n)}")
        cholesky(P)
    return MpcProblem(A, B, C, D, d, Q, R, int(N), x_init, P)


@dataclass(frozen=True)
class StageData:
    """Per-stage matrices of the split problem."""

    Qcal: np.ndarray
    factor: CholeskyFactor
    H1: np.ndarray
    H2: np.ndarray
    G: np.ndarray


def _stage(Q, R, A, B, C, D):
    n, m = B.shape
    Qcal = np.zeros((n + m, n + m))
    Qcal[:n, :n] = Q
    Qcal[n:, n:] = R
    return StageData(Qcal=Qcal, factor=cholesky(Qcal),
                     H1=np.hstack([np.eye(n), np.zeros((n, m))]),
                     H2=np.hstack([A, B]), G=np.hstack([C, D]))


@dataclass(frozen=True)
class PrimalVars:
    """Primal iterate of the split problem.

    ``y`` has shape (N+1, n+m) with ``y[0, :n] = x_init``; ``z`` has shape
    (N, n) with ``z[t-1]`` the consensus copy of ``x_t``; ``sigma`` has shape
    (N+1, p).
    """

    y: np.ndarray
    z: np.ndarray = None
    sigma: np.ndarray = None

    def states(self, n):
        return self.y[:, :n]

    def inputs(self, n):
        return self.y[:, n:]


@dataclass(frozen=True)
class SplitProblem:
    problem: MpcProblem
    stage: StageData
    terminal: StageData
    R_factor: CholeskyFactor
    Hy: np.ndarray
    Hz: np.ndarray
    dbar: np.ndarray
    sigma_f: float
    L_f: float
    eig_max_Hy: float
    eig_min_Hy: float
    stage_eig_max: np.ndarray = field(repr=False)
    row_slices: list = field(repr=False)
    col_slices: list = field(repr=False)

    @property
    def N(self):
        return self.problem.N

    @property
    def n(self):
        return self.problem.n

    @property
    def m(self):
        return self.problem.m

    @property
    def p(self):
        return self.problem.p

    @property
    def x_init(self):
        return self.problem.x_init

    @property
    def LgradF(self):
        return self.eig_max_Hy / self.sigma_f

    def stage_data(self, t):
        return self.terminal if t == self.N else self.stage

    def stage_block(self, t):
        """Column block of ``Hy`` for stage ``t`` restricted to its rows."""
        return self.Hy[self.row_slices[t], self.col_slices[t]]

    def with_initial_state(self, x_init):
        """Same split with a new initial state; only stage-0 data changes."""
        prob = self.problem.with_initial_state(x_init)
        x0 = prob.x_init
        dbar = self.dbar.copy()
        dbar[self.row_slices[0]] = np.concatenate([-prob.A @ x0,
                                                   -prob.d + prob.C @ x0])
        return replace(self, problem=prob, dbar=dbar)

    @property
    def const(self):
        """Cost of the fixed initial state, ``1/2 x_init' Q x_init``."""
        x0 = self.x_init
        return 0.5 * float(x0 @ self.problem.Q @ x0)


def stage_rows(t, N, n, p):
    """Row count of stage ``t``'s block: (w_t?, v_{t+1}?, lambda_t)."""
    return (n if t >= 1 else 0) + (n if t <= N - 1 else 0) + p


def time_split(prob):
    """Split an :class:`MpcProblem` along its horizon.

    Builds the per-stage matrices, the stacked ``Hy``, ``Hz``, ``dbar`` and
    the curvature constants ``sigma_f``, ``L_f`` and ``eig_max(Hy)``.
    """
    A, B, C, D, d = prob.A, prob.B, prob.C, prob.D, prob.d
    n, m, p, N = prob.n, prob.m, prob.p, prob.N
    stage = _stage(prob.Q, prob.R, A, B, C, D)
    terminal = stage if prob.P is None else _stage(prob.terminal_weight,
                                                   prob.R, A, B, C, D)
    x0 = prob.x_init

    n_rows = sum(stage_rows(t, N, n, p) for t in range(N + 1))
    n_cols = m + N * (n + m)
    n_z = N * n + (N + 1) * p
    Hy = np.zeros((n_rows, n_cols))
    Hz = np.zeros((n_rows, n_z))
    dbar = np.zeros(n_rows)
    row_slices, col_slices = [], []
    r = 0
    for t in range(N + 1):
        data = terminal if t == N else stage
        c0 = 0 if t == 0 else m + (t - 1) * (n + m)
        cols = slice(c0, c0 + (m if t == 0 else n + m))
        # stage 0 keeps only the input columns; x_0 is substituted
        keep = slice(n, n + m) if t == 0 else slice(0, n + m)
        rows_start = r
        if t >= 1:  # w_t: H1 y_t - z_t = 0
            Hy[r:r + n, cols] = data.H1[:, keep]
            Hz[r:r + n, (t - 1) * n:t * n] = -np.eye(n)
            r += n
        if t <= N - 1:  # v_{t+1}: H2 y_t - z_{t+1} = 0
            Hy[r:r + n, cols] = data.H2[:, keep]
            Hz[r:r + n, t * n:(t + 1) * n] = -np.eye(n)
            if t == 0:
                dbar[r:r + n] = -A @ x0
            r += n
        # lambda_t: -G y_t - sigma_t = -d
        Hy[r:r + p, cols] = -data.G[:, keep]
        Hz[r:r + p, N * n + t * p:N * n + (t + 1) * p] = -np.eye(p)
        dbar[r:r + p] = -d + (C @ x0 if t == 0 else 0.0)
        r += p
        row_slices.append(slice(rows_start, r))
        col_slices.append(cols)

    # Qcal is symmetric positive definite, so its singular values are its
    # eigenvalues: take square roots of the eig(M'M) estimates
    qmax, qmin = extreme_singular_values(stage.Qcal)
    sigma_f, L_f = np.sqrt(qmin), np.sqrt(qmax)
    if terminal is not stage:
        tmax, tmin = extreme_singular_values(terminal.Qcal)
        sigma_f, L_f = min(sigma_f, np.sqrt(tmin)), max(L_f, np.sqrt(tmax))
    eig_max_Hy, eig_min_Hy = extreme_singular_values(Hy)
    # a stage block can vanish (stage 0 with B = 0 and D = 0)
    stage_eig_max = np.array([
        extreme_singular_values(block)[0] if np.any(block) else 0.0
        for block in (Hy[row_slices[t], col_slices[t]] for t in range(N + 1))])

    return SplitProblem(problem=prob, stage=stage, terminal=terminal,
                        R_factor=cholesky(prob.R), Hy=Hy, Hz=Hz, dbar=dbar,
                        sigma_f=float(sigma_f), L_f=float(L_f),
                        eig_max_Hy=float(eig_max_Hy),
                        eig_min_Hy=float(eig_min_Hy),
                        stage_eig_max=stage_eig_max,
                        row_slices=row_slices, col_slices=col_slices)


def stacked_hessian(split):
    """Block-diagonal Hessian of ``f`` over the stacked decision vector."""
    n_cols = split.Hy.shape[1]
    Qbig = np.zeros((n_cols, n_cols))
    for t in range(split.N + 1):
        block = split.problem.R if t == 0 else split.stage_data(t).Qcal
        Qbig[split.col_slices[t], split.col_slices[t]] = block
    return Qbig


def stack_primal(split, y):
    """Stacked decision vector ``[u_0, y_1, ..., y_N]`` from (N+1, n+m)."""
    return np.concatenate([y[0, split.n:], y[1:].ravel()])


def unstack_primal(split, vec):
    y = np.empty((split.N + 1, split.n + split.m))
    y[0, :split.n] = split.x_init
    y[0, split.n:] = vec[:split.m]
    y[1:] = vec[split.m:].reshape(split.N, split.n + split.m)
    return y


def primal_objective(prob, vars):
    """Stage cost ``1/2 sum_t y_t' Qcal y_t`` of a primal iterate."""
    y = np.asarray(vars.y if isinstance(vars, PrimalVars) else vars, dtype=float)
    n, m, N = prob.n, prob.m, prob.N
    if y.shape != (N + 1, n + m):
        raise DimensionMismatch(f"y has shape {y.shape}, expected {(N + 1, n + m)}")
    x, u = y[:, :n], y[:, n:]
    cost = np.einsum("ti,ij,tj->", x[:N], prob.Q, x[:N])
    cost += x[N] @ prob.terminal_weight @ x[N]
    cost += np.einsum("ti,ij,tj->", u, prob.R, u)
    return 0.5 * float(cost)


def consensus_from_y(split, y):
    """Consensus and slack values implied by a primal ``y`` sequence."""
    st = split.stage
    x_pred = y[:-1] @ st.H2.T
    z = 0.5 * (y[1:, :split.n] + x_pred)
    sigma = np.maximum(split.problem.d - y @ st.G.T, 0.0)
    return z, sigma


def residuals(split, vars, x_init=None):
    """Consensus residual and worst inequality violation.

    Returns
    -------
    consensus_res : float
        Largest infinity-norm mismatch among ``z_{t+1} - H2 y_t``,
        ``z_{t+1} - H1 y_{t+1}`` and ``H1 y_0 - x_init``.
    ineq_violation : float
        Largest positive part of ``G y_t - d``.
    """
    x_init = split.x_init if x_init is None else np.asarray(x_init, dtype=float)
    N, n = split.N, split.n
    y = np.asarray(vars.y, dtype=float)
    if y.shape != (N + 1, n + split.m):
        raise DimensionMismatch(f"y has shape {y.shape}")
    z = vars.z
    if z is None:
        z, _ = consensus_from_y(split, y)
    if z.shape != (N, n):
        raise DimensionMismatch(f"z has shape {z.shape}")
    st = split.stage
    res = np.max(np.abs(y[0, :n] - x_init))
    res = max(res, np.max(np.abs(z - y[:-1] @ st.H2.T)))
    res = max(res, np.max(np.abs(z - y[1:, :n])))
    viol = np.max(y @ st.G.T - split.problem.d, initial=0.0)
    return float(res), float(max(viol, 0.0))
