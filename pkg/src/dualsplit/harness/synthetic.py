"""Random ill-conditioned plants for benchmarking."""

import numpy as np

from ..model import build_problem
from ..oracle import condense
from ..numerics import cholesky
from ..sampling import InvalidParameter
from .io import problem_to_dict

SPECTRAL_RADIUS = 0.98


def _dynamics(n, rng):
    """Stable A with spectral radius 0.98 and lightly damped complex pole pairs."""
    blocks = []
    k = 0
    while k + 2 <= n:
        # poles close to the imaginary axis
        theta = rng.uniform(0.35 * np.pi, 0.5 * np.pi)
        r = rng.uniform(0.9, 1.0)
        c, s = r * np.cos(theta), r * np.sin(theta)
        blocks.append(np.array([[c, -s], [s, c]]))
        k += 2
    if k < n:
        blocks.append(np.array([[rng.uniform(0.5, 1.0)]]))
    Lam = np.zeros((n, n))
    i = 0
    for b in blocks:
        Lam[i:i + b.shape[0], i:i + b.shape[0]] = b
        i += b.shape[0]
    # mild non-normality keeps the eigenvalues while mixing the states
    S = np.eye(n) + 0.3 * rng.standard_normal((n, n)) / np.sqrt(n)
    A = S @ Lam @ np.linalg.inv(S)
    return A * (SPECTRAL_RADIUS / np.max(np.abs(np.linalg.eigvals(A))))


def gen_synthetic_problem(n, m, N, target_kappa, seed, p=None,
                          input_fraction=0.5, state_margin=1.5, q_min=1.0,
                          input_gain=1.0, row_scale=1.0):
    """Random MPC instance with box constraints and a prescribed conditioning.

    Parameters
    ----------
    n, m, N : int
        State, input and horizon sizes.
    target_kappa : float
        Condition number of the stage Hessian ``blkdiag(Q, R)``. ``Q`` is
        diagonal with entries log-spaced in
        ``[min(q_min, target_kappa), target_kappa]`` and ``R = I``, so the
        ratio ``L_f / sigma_f`` equals ``target_kappa`` whenever
        ``q_min >= 1``.
    seed : int
    p : int, optional
        Number of constraint rows. The first ``2(n+m)`` are the state and
        input boxes; fewer keeps a prefix, more appends random mixed
        state-input rows implied by the boxes. All rows have norm ``row_scale``.
    input_fraction : float
        Input bounds as a fraction of the largest unconstrained optimal
        input, so that some input constraints are active.
    state_margin : float
        State bounds as a multiple of the largest free-response excursion,
        which keeps the zero-input sequence strictly feasible.
    q_min : float
        Smallest state weight (see ``target_kappa``).
    input_gain : float
        Column norm of ``B``.
    row_scale : float
        Norm of every constraint row; rescaling rows leaves the feasible
        set unchanged but scales the dual curvature.

    Returns
    -------
    MpcProblem
    """
    if not target_kappa >= 1:
        raise InvalidParameter("target_kappa must be at least 1")
    if min(n, m, N) < 1:
        raise InvalidParameter("n, m and N must be positive")
    if p is not None and p < 1:
        raise InvalidParameter("p must be positive")
    if not (input_fraction > 0 and state_margin > 1):
        raise InvalidParameter("need input_fraction > 0 and state_margin > 1")
    if not (q_min > 0 and input_gain > 0 and row_scale > 0):
        raise InvalidParameter("q_min, input_gain and row_scale must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    A = _dynamics(n, rng)
    B = rng.standard_normal((n, m))
    B *= input_gain / np.linalg.norm(B, axis=0)
    if n == 1:
        q = np.array([float(target_kappa)])
    else:
        q = np.logspace(np.log10(min(q_min, target_kappa)),
                        np.log10(target_kappa), n)
    Q = np.diag(q)
    R = np.eye(m)
    x_init = rng.standard_normal(n)

    # free response over a long window bounds the zero-input trajectory
    x, peak = x_init.copy(), np.abs(x_init)
    for _ in range(10 * N + 50):
        x = A @ x
        peak = np.maximum(peak, np.abs(x))
    x_max = state_margin * peak
    loose = build_problem(A, B, np.zeros((1, n)), np.zeros((1, m)), [1.0],
                          Q, R, N, x_init)
    qp = condense(loose)
    u_free = -cholesky(qp.H).solve(qp.f).reshape(N + 1, m)
    u_max = input_fraction * np.maximum(np.max(np.abs(u_free), axis=0), 1e-3)

    # rows of equal norm keep eig_max(Hy) independent of the bound magnitudes
    C = np.vstack([np.eye(n), -np.eye(n), np.zeros((2 * m, n))])
    D = np.vstack([np.zeros((2 * n, m)), np.eye(m), -np.eye(m)])
    d = np.concatenate([x_max, x_max, u_max, u_max])
    if p is not None and p < C.shape[0]:
        C, D, d = C[:p], D[:p], d[:p]
    elif p is not None and p > C.shape[0]:
        extra = p - C.shape[0]
        rows = rng.standard_normal((extra, n + m))
        rows /= np.linalg.norm(rows, axis=1)[:, None]
        Ce, De = rows[:, :n], rows[:, n:]
        C, D = np.vstack([C, Ce]), np.vstack([D, De])
        d = np.concatenate([d, np.abs(Ce) @ x_max + np.abs(De) @ u_max])
    C, D, d = row_scale * C, row_scale * D, row_scale * d
    return build_problem(A, B, C, D, d, Q, R, N, x_init)


def gen_synthetic(n, m, N, target_kappa, seed, p=None, **kwargs):
    """ProblemFile document for :func:`gen_synthetic_problem`."""
    return problem_to_dict(gen_synthetic_problem(n, m, N, target_kappa, seed,
                                                 p=p, **kwargs))
