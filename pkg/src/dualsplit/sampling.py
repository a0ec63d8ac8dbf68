"""Sampling distributions over horizon stages {0, ..., N}.

Random indices come from numpy's Philox generator, a counter-based bit
generator: the same seed reproduces the same stream on every platform.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .numerics import DimensionMismatch

KINDS = ("uniform", "poisson", "pareto", "custom", "adaptive")


class InvalidParameter(ValueError):
    pass


@dataclass(frozen=True)
class Distribution:
    probs: np.ndarray
    kind: str = "custom"
    params: dict = None

    @property
    def N(self):
        return self.probs.size - 1

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise InvalidParameter("probs must be a nonempty vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidParameter("probs must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidParameter(f"probs sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)


def _normalize(w):
    return w / w.sum()


def default_params(kind, N):
    """Default shape parameters (arbitrary, documented choices)."""
    if kind == "poisson":
        return {"rate": N / 4}
    if kind == "pareto":
        return {"shape": 1.5, "scale": N / 4}
    return {}


def make_distribution(kind, params=None, N=None):
    """Probability vector over ``{0..N}`` for a named distribution.

    ``poisson`` uses the Poisson mass with the given ``rate`` and ``pareto``
    the generalized Pareto density with ``shape`` and ``scale``, both
    evaluated at ``t = 0..N`` and renormalized. ``custom`` takes
    ``params["probs"]``. ``adaptive`` starts uniform.
    """
    if kind not in KINDS:
        raise InvalidParameter(f"unknown distribution kind {kind!r}")
    if kind == "custom":
        probs = np.asarray((params or {}).get("probs"), dtype=float)
        if probs.ndim != 1:
            raise InvalidParameter("custom distribution needs params['probs']")
        if N is not None and probs.size != N + 1:
            raise DimensionMismatch("custom probs length must be N+1")
        if probs.sum() <= 0:
            raise InvalidParameter("custom probs have zero mass")
        return Distribution(_normalize(probs), "custom", dict(params))
    if N is None or int(N) != N or N < 0:
        raise InvalidParameter(f"N must be a nonnegative integer, got {N}")
    params = {**default_params(kind, N), **(params or {})}
    t = np.arange(N + 1)
    if kind in ("uniform", "adaptive"):
        w = np.ones(N + 1)
    elif kind == "poisson":
        rate = params["rate"]
        if not rate > 0:
            raise InvalidParameter("poisson rate must be positive")
        w = stats.poisson.pmf(t, rate)
    else:
        shape, scale = params["shape"], params["scale"]
        if not (shape > 0 and scale > 0):
            raise InvalidParameter("pareto shape and scale must be positive")
        w = stats.genpareto.pdf(t, shape, scale=scale)
    if w.sum() <= 0:
        raise InvalidParameter(f"{kind} mass underflows on 0..{N}")
    return Distribution(_normalize(w), kind, params)


class Rng:
    """Seeded stream of uniform draws (Philox counter-based generator).

    ``seed`` is an integer or a sequence of integers (e.g. ``(seed, step)``
    for independent streams per closed-loop step).
    """

    def __init__(self, seed):
        self.seed = int(seed) if np.ndim(seed) == 0 else tuple(int(s) for s in seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniforms(self, size):
        return self._gen.random(size)


def indices_from_uniforms(probs, u):
    """Inverse-CDF lookup; never returns an index of zero probability."""
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u, side="right")
    # guard against cdf[-1] rounding below 1
    last = np.flatnonzero(probs > 0)[-1]
    return np.minimum(idx, last)


def sample(dist, rng, size=None):
    """Draw stage indices according to ``dist``."""
    u = rng.uniforms(1 if size is None else size)
    idx = indices_from_uniforms(dist.probs, u)
    return int(idx[0]) if size is None else idx


def adapt(dist, lambda_change_sq, threshold=0.01, floor=0.0):
    """Move probability away from stages whose multipliers have settled.

    Every stage ``t`` with ``lambda_change_sq[t] < threshold`` keeps half of
    its mass and passes a quarter to each neighbour; at ``t = 0`` and
    ``t = N`` the single neighbour gets the whole half. All qualifying
    stages are updated simultaneously from the input probabilities, so the
    result does not depend on the order of the stages.
    """
    probs = dist.probs
    change = np.asarray(lambda_change_sq, dtype=float)
    if change.shape != probs.shape:
        raise DimensionMismatch(
            f"lambda_change_sq has shape {change.shape}, expected {probs.shape}")
    hit = change < threshold
    if not hit.any():
        return dist
    N = probs.size - 1
    moved = np.where(hit, 0.5 * probs, 0.0)
    new = probs - moved
    if N == 0:
        new = probs.copy()
    else:
        left = moved[1:].copy()    # mass sent from t to t-1
        right = moved[:-1].copy()  # mass sent from t to t+1
        left[:-1] *= 0.5
        right[1:] *= 0.5
        new[:-1] += left
        new[1:] += right
    if floor > 0:
        new = np.maximum(new, floor)
    new = np.maximum(new, 0.0)
    new /= new.sum()
    return Distribution(new, "adaptive", dist.params)
