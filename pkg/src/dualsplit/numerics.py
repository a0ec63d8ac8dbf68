"""Dense linear-algebra kernels shared by the model, solvers and oracle.

Everything here is a pure function of its inputs. Problem sizes are small
(a few hundred variables at most), so dense row-major numpy arrays are used
throughout.
"""

import numpy as np
from scipy import linalg

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-14
EIG_RTOL = 1e-8
EIG_MAXITER = 10000


class NotPositiveDefinite(ValueError):
    """Raised when a matrix expected to be SPD is not."""


class NoConvergence(RuntimeError):
    """Raised when an iterative eigenvalue estimate hits its iteration cap."""


class DimensionMismatch(ValueError):
    """Raised when array shapes are mutually inconsistent."""


class CholeskyFactor:
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == M``.

    Parameters
    ----------
    lower : ndarray
        The lower-triangular factor.
    """

    def __init__(self, lower):
        self.lower = np.asarray(lower, dtype=float)

    @property
    def n(self):
        return self.lower.shape[0]

    def solve(self, b):
        """Solve ``M x = b`` with two triangular solves (``b`` may be 2-D)."""
        return linalg.cho_solve((self.lower, True), b, check_finite=False)

    def reconstruct(self):
        return self.lower @ self.lower.T

    def inverse(self):
        return self.solve(np.eye(self.n))


def cholesky(M, pivot_tol=PIVOT_TOL, symmetry_tol=SYMMETRY_TOL):
    """Cholesky factorization of a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If ``M`` is not symmetric, or a pivot falls below
        ``pivot_tol * max(diag(M))``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.max(np.abs(M)), 1.0)
    if np.max(np.abs(M - M.T)) > symmetry_tol * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    max_diag = np.max(np.diag(M))
    if max_diag <= 0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        lower = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(lower) ** 2
    if np.min(pivots) <= pivot_tol * max_diag:
        raise NotPositiveDefinite(
            f"pivot {np.min(pivots):.3e} below {pivot_tol:g} * max diagonal")
    return CholeskyFactor(lower)


BLOCK_SIZE = 6


def _start_block(n, k):
    # fixed start so repeated calls agree bit for bit
    V = np.random.default_rng(12345).standard_normal((n, k))
    return np.linalg.qr(V)[0]


def _power_iteration(apply, n, rtol, maxiter, block=BLOCK_SIZE):
    """Largest eigenvalue of a symmetric PSD operator by block power iteration.

    A Rayleigh-Ritz step on a block of ``block`` vectors makes clustered
    leading eigenvalues converge at the rate of the first eigenvalue
    outside the block instead of the second one.
    """
    k = min(n, block)
    V = _start_block(n, k)
    lam = None
    for _ in range(maxiter):
        W = apply(V)
        H = V.T @ W
        new = float(np.linalg.eigvalsh(0.5 * (H + H.T))[-1])
        if not np.any(W):
            return 0.0
        V = np.linalg.qr(W)[0]
        if lam is not None and abs(new - lam) <= rtol * abs(new):
            return new
        lam = new
    raise NoConvergence(f"power iteration did not converge in {maxiter} steps")


def extreme_singular_values(M, rtol=EIG_RTOL, maxiter=EIG_MAXITER):
    """Largest and smallest eigenvalues of ``M.T @ M``.

    These are the squared extreme singular values of ``M``. The largest is
    found by power iteration on ``M.T @ M``; the smallest by inverse
    iteration on ``M.T @ M + s I`` with ``s = 1e-12 * trace``, which keeps
    the factorization well defined for rank-deficient ``M``.

    Returns
    -------
    eig_max, eig_min : float
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.any(M):
        raise ValueError("extreme_singular_values needs a nonzero matrix")
    gram = M.T @ M
    n = gram.shape[0]
    eig_max = _power_iteration(lambda x: gram @ x, n, rtol, maxiter)

    shift = 1e-12 * np.trace(gram)
    factor = cholesky(gram + shift * np.eye(n))
    # inverse iteration converges on 1/(eig_min + shift); tighten the
    # tolerance so the subtraction of the shift keeps rtol accuracy
    nu = _power_iteration(factor.solve, n, rtol * 1e-2, maxiter)
    eig_min = max(1.0 / nu - shift, 0.0)
    eig_min = min(eig_min, eig_max)
    return eig_max, eig_min


def project_nonneg(x):
    """Euclidean projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(x, dtype=float), 0.0)
