"""Convergence constants and the geometric-rate certificate."""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import StepTooLarge


@dataclass(frozen=True)
class Constants:
    sigma_f: float
    L_f: float
    eig_max_Hy: float
    eig_min_Hy: float
    LgradF: float          # eig_max(Hy) / sigma_f, Lipschitz constant of grad F
    L_star: float          # same quantity, used by the split solver (pi-free)
    L_pi_star: float       # max_t eig_max(Hy) / (pi_t sigma_f)
    L_pi_star_min: float   # max_t eig_min(Hy) / (pi_t sigma_f), as printed
    L_pi: float            # max_t L_t / pi_t with per-stage L_t


def compute_constants(split, dist=None):
    """Curvature constants of the split dual.

    ``dist`` (a :class:`~dualsplit.sampling.Distribution`) is needed for the
    sampler-dependent constants; without it they are reported for the
    uniform distribution.
    """
    N = split.N
    probs = np.full(N + 1, 1.0 / (N + 1)) if dist is None else dist.probs
    sigma_f = split.sigma_f
    LgradF = split.eig_max_Hy / sigma_f
    inv_pi = np.where(probs > 0, 1.0 / np.where(probs > 0, probs, 1.0), np.inf)
    per_stage = split.stage_eig_max / sigma_f
    return Constants(
        sigma_f=sigma_f, L_f=split.L_f,
        eig_max_Hy=split.eig_max_Hy, eig_min_Hy=split.eig_min_Hy,
        LgradF=LgradF, L_star=LgradF,
        L_pi_star=float(np.max(inv_pi)) * LgradF,
        L_pi_star_min=float(np.max(inv_pi)) * split.eig_min_Hy / sigma_f,
        L_pi=float(np.max(per_stage * inv_pi)),
    )


def compute_rho(tau, T, L_const, sigma_or_Lf, variant="thm2"):
    """Contraction factor of the variance-reduced methods.

    ``variant="thm1"`` (primal Prox-SVRG) reads ``sigma_or_Lf`` as the
    strong convexity ``sigma_F`` and evaluates

        1/(tau sigma_F T (1 - 4 tau L)) + 4 tau L (T+1) / (T (1 - 4 tau L));

    ``variant="thm2"`` (dual SVR-AMA) reads it as ``L_f`` and replaces the
    first term by ``L_f / (tau T (1 - 4 tau L))``.

    Returns
    -------
    rho : float
        The certificate is valid when ``rho < 1``.

    Raises
    ------
    StepTooLarge
        If ``tau >= 1 / (4 L_const)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if T < 1:
        raise ValueError("T must be at least 1")
    x = 4.0 * tau * L_const
    if x >= 1.0:
        raise StepTooLarge(
            f"tau = {tau:g} violates tau < 1/(4L) = {1.0 / (4.0 * L_const):g}")
    if variant == "thm1":
        first = 1.0 / (tau * sigma_or_Lf * T * (1.0 - x))
    elif variant == "thm2":
        first = sigma_or_Lf / (tau * T * (1.0 - x))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return first + x * (T + 1) / (T * (1.0 - x))


def certified_step(T, L_const, sigma_or_Lf, variant="thm2"):
    """Step size in ``(0, 1/(4L))`` minimizing ``compute_rho`` for fixed T."""
    upper = 1.0 / (4.0 * L_const)
    res = optimize.minimize_scalar(
        lambda s: compute_rho(s * upper, T, L_const, sigma_or_Lf, variant),
        bounds=(1e-6, 1 - 1e-6), method="bounded",
        options={"xatol": 1e-10})
    tau = float(res.x) * upper
    return tau, compute_rho(tau, T, L_const, sigma_or_Lf, variant)


def stages_for_gap(rho, initial_gap, target_gap):
    """Outer stages after which ``rho**s * initial_gap <= target_gap``."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if initial_gap <= target_gap:
        return 1
    return int(np.ceil(np.log(target_gap / initial_gap) / np.log(rho)))
