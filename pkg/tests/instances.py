"""Small problem instances shared by the tests."""

import numpy as np

from dualsplit import build_problem


def scalar_problem(A=1.0, B=1.0, C=1.0, D=1.0, d=1.0, Q=1.0, R=1.0, N=2,
                   x_init=1.0):
    return build_problem([[A]], [[B]], [[C]], [[D]], [d], [[Q]], [[R]], N,
                         [x_init])


def random_problem(rng, n=2, m=1, N=3, p=None, wide=False):
    """Random stable instance with box rows; ``wide`` makes them inactive."""
    A = rng.standard_normal((n, n))
    A *= 0.9 / max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n, m))
    M = rng.standard_normal((n, n))
    Q = M @ M.T + np.eye(n)
    R = np.eye(m) * rng.uniform(0.5, 2.0)
    C = np.vstack([np.eye(n), np.zeros((m, n))])
    D = np.vstack([np.zeros((n, m)), np.eye(m)])
    x_init = rng.standard_normal(n)
    bound = 1e3 if wide else 0.4
    d = np.full(n + m, bound)
    d[:n] = 1e3 if wide else np.abs(x_init).max() + 2.0
    if p is not None:
        C, D, d = C[:p], D[:p], d[:p]
    return build_problem(A, B, C, D, d, Q, R, N, x_init)
