"""Shared solver types: configuration, traces, dual variables, stage maps."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..model import PrimalVars, consensus_from_y, primal_objective, residuals
from ..numerics import DimensionMismatch
from ..sampling import Distribution, make_distribution
from . import _kernels


class StepTooLarge(ValueError):
    """The step size violates the convergence condition of the method."""


class NonFiniteIterate(FloatingPointError):
    """An iterate became NaN or infinite."""


class InsufficientSeeds(ValueError):
    pass


@dataclass
class SolverConfig:
    """Parameters shared by AMA and the variance-reduced variants.

    ``update`` selects how the split solver moves the duals per inner
    iteration: ``"block"`` (default) moves only the sampled stage's block
    (w_i, v_i, lambda_i); ``"full"`` takes a proximal step on every block
    along the variance-reduced direction, which is the generic
    variance-reduced iteration the rate certificate refers to.
    ``neighbor`` picks which value of y_{i-1} the block update reads
    (``"latest"`` stored or ``"snapshot"``).
    """

    tau: float
    T: int = 10
    s_bar: int = 100
    distribution: str = "uniform"
    distribution_params: dict = None
    adaptive: bool = False
    adapt_threshold: float = 0.01
    prob_floor: float = 0.0
    accelerate: bool = False
    seed: int = 0
    update: str = "block"
    neighbor: str = "latest"
    check_step: bool = True
    kkt_tol: float = 1e-8
    domain_tol: float = 1e-9
    keep_iterates: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.T < 1 or self.s_bar < 1:
            raise ValueError("T and s_bar must be at least 1")
        if self.update not in ("full", "block"):
            raise ValueError(f"unknown update mode {self.update!r}")
        if self.neighbor not in ("latest", "snapshot"):
            raise ValueError(f"unknown neighbor mode {self.neighbor!r}")

    def make_distribution(self, N):
        kind = "uniform" if self.adaptive else self.distribution
        if isinstance(kind, Distribution):
            return kind
        return make_distribution(kind, self.distribution_params, N)


@dataclass
class SolverTrace:
    """One record per completed outer stage (per iteration for AMA)."""

    dual_value: list = field(default_factory=list)
    primal_objective: list = field(default_factory=list)
    consensus_res: list = field(default_factory=list)
    ineq_violation: list = field(default_factory=list)
    counts: list = field(default_factory=list)
    adaptations: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    y: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    y_last: np.ndarray = None
    probs: np.ndarray = None
    started: float = field(default_factory=time.perf_counter, repr=False)

    def __len__(self):
        return len(self.dual_value)


@dataclass
class DualVars:
    """Multipliers of the split problem.

    ``w`` and ``v`` have shape (N, n) with row ``t-1`` holding w_t, v_t;
    ``lam`` has shape (N+1, p).
    """

    w: np.ndarray
    v: np.ndarray
    lam: np.ndarray

    def copy(self):
        return DualVars(self.w.copy(), self.v.copy(), self.lam.copy())

    def stack(self):
        """Stacked multiplier in the row order of ``Hy``.

        Per stage t the rows are (w_t, v_{t+1}, lambda_t), skipping w_0 and
        v_{N+1}.
        """
        N = self.lam.shape[0] - 1
        parts = []
        for t in range(N + 1):
            if t >= 1:
                parts.append(self.w[t - 1])
            if t <= N - 1:
                parts.append(self.v[t])
            parts.append(self.lam[t])
        return np.concatenate(parts)

    @classmethod
    def from_stacked(cls, split, mu):
        N, n, p = split.N, split.n, split.p
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (split.Hy.shape[0],):
            raise DimensionMismatch(f"mu has shape {mu.shape}")
        w, v, lam = np.zeros((N, n)), np.zeros((N, n)), np.zeros((N + 1, p))
        r = 0
        for t in range(N + 1):
            if t >= 1:
                w[t - 1] = mu[r:r + n]
                r += n
            if t <= N - 1:
                v[t] = mu[r:r + n]
                r += n
            lam[t] = mu[r:r + p]
            r += p
        return cls(w, v, lam)

    def __add__(self, other):
        return DualVars(self.w + other.w, self.v + other.v, self.lam + other.lam)

    def __sub__(self, other):
        return DualVars(self.w - other.w, self.v - other.v, self.lam - other.lam)

    def scale(self, a):
        return DualVars(a * self.w, a * self.v, a * self.lam)

    def is_finite(self):
        return (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.v))
                and np.all(np.isfinite(self.lam)))


def init_duals(split):
    """Feasible all-zero starting multipliers."""
    N, n, p = split.N, split.n, split.p
    return DualVars(np.zeros((N, n)), np.zeros((N, n)), np.zeros((N + 1, p)))


def is_dual_feasible(duals, tol=1e-9):
    """Whether ``duals`` lies in the domain of the non-smooth dual term."""
    scale = max(1.0, float(np.max(np.abs(duals.w), initial=0.0)),
                float(np.max(np.abs(duals.lam), initial=0.0)))
    consensus = np.max(np.abs(duals.w + duals.v), initial=0.0)
    return consensus <= tol * scale and np.min(duals.lam, initial=0.0) >= -tol * scale


class StageOperators:
    """Prefactored stage maps ``(w, v, lambda) -> y`` and gradient rows."""

    def __init__(self, split):
        self.split = split
        st, term = split.stage, split.terminal
        R_factor = split.R_factor
        B, D = split.problem.B, split.problem.D
        self.maps = (
            st.factor.solve(st.H1.T),
            st.factor.solve(st.H2.T),
            -st.factor.solve(st.G.T),
            term.factor.solve(term.H1.T),
            -term.factor.solve(term.G.T),
            R_factor.solve(B.T),
            -R_factor.solve(D.T),
        )
        self.maps = tuple(np.ascontiguousarray(M) for M in self.maps)
        self.H2 = np.ascontiguousarray(st.H2)
        self.G = np.ascontiguousarray(st.G)
        self.d = np.ascontiguousarray(split.problem.d)
        self.x_init = np.ascontiguousarray(split.x_init, dtype=float)

    def primal(self, duals, out=None):
        """Stage minimizers ``y(mu)`` for every stage."""
        N, nm = self.split.N, self.split.n + self.split.m
        Y = np.empty((N + 1, nm)) if out is None else out
        _kernels.solve_all(duals.w, duals.v, duals.lam, self.maps,
                           self.x_init, Y)
        return Y

    def gradient_rows(self, Y):
        """Rows (a, b, c) with a_t = x_t, b_t = H2 y_{t-1}, c_t = G y_t - d."""
        N, n, p = self.split.N, self.split.n, self.split.p
        a, b, c = np.empty((N, n)), np.empty((N, n)), np.empty((N + 1, p))
        _kernels.predictions(Y, self.H2, self.G, self.d, a, b, c)
        return a, b, c

    def prox_step(self, duals, a, b, c, tau):
        """In-place proximal dual step given gradient rows."""
        _kernels.prox_all(duals.w, duals.v, duals.lam, a, b, c, tau)


def dual_value(split, duals, Y):
    """Dual objective at ``duals`` given its stage minimizers ``Y``.

    Assumes ``duals`` lies in the domain; see :func:`dual_surrogate`.
    """
    n = split.n
    prob = split.problem
    cost = primal_objective(prob, Y)
    x0 = split.x_init
    # the x_0 part of ``cost`` is the constant, which cancels
    linear = -float((prob.A @ x0) @ duals.v[0])
    linear -= float(np.sum(duals.lam @ prob.d))
    linear += float((prob.C @ x0) @ duals.lam[0])
    return split.const - (cost - 0.5 * float(Y[0, :n] @ prob.Q @ Y[0, :n])) + linear


def dual_surrogate(split, duals, primal_snapshot=None, domain_tol=1e-9):
    """Dual function ``D(mu) = -F(mu) - G(mu)`` (plus the x_init constant).

    Returns ``None`` when ``duals`` is outside the domain of ``G``, i.e.
    when some ``w_t + v_t`` is nonzero or some ``lambda_t`` is negative
    beyond ``domain_tol``.
    """
    if not is_dual_feasible(duals, domain_tol):
        return None
    Y = primal_snapshot
    if Y is None:
        Y = StageOperators(split).primal(duals)
    return dual_value(split, duals, Y)


def primal_from_y(split, Y):
    z, sigma = consensus_from_y(split, Y)
    return PrimalVars(y=Y, z=z, sigma=sigma)


def record(trace, split, duals, Y, config):
    """Append the per-stage diagnostics of ``duals`` (primal ``Y = y(duals)``)."""
    if not duals.is_finite() or not np.all(np.isfinite(Y)):
        raise NonFiniteIterate("dual iterate became non-finite")
    dv = dual_surrogate(split, duals, Y, config.domain_tol)
    trace.dual_value.append(math.nan if dv is None else dv)
    trace.primal_objective.append(primal_objective(split.problem, Y))
    res, viol = residuals(split, PrimalVars(y=Y))
    trace.consensus_res.append(res)
    trace.ineq_violation.append(viol)
    trace.wall_time.append(time.perf_counter() - trace.started)
    if config.keep_iterates:
        trace.mu.append(duals.copy())
        trace.y.append(Y.copy())
