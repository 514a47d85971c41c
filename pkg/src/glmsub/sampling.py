"""Subsampling distributions and with-replacement draws.

Two importance distributions drive the package.  Both weight a row by
the absolute residual at a reference coefficient vector; they differ in
the second factor:

* ``mV``   multiplies by the norm of the information-whitened row
  ``info^{-1} x_i`` and minimizes the trace of the estimator's
  asymptotic variance;
* ``mVc``  multiplies by the plain row norm ``|x_i|``, which drops the
  p-by-p solve and minimizes the trace of the score variance instead.

Rows with zero residual get probability zero (the 0/0 convention); a
positive threshold ``delta`` floors the residual factor so every row
stays reachable.  ``Lev`` / adjusted leverage distributions are included
for benchmarking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateWeightsError, SingularityError
from .families import Family
from .solver import FullData, WeightedSample

__all__ = [
    "METHODS",
    "SamplingWeights",
    "Subsample",
    "AliasTable",
    "uniform_weights",
    "mv_probs",
    "mvc_probs",
    "leverage_weights",
    "draw_subsample",
]

METHODS = ("UNIF", "mV", "mVc", "Lev", "LevA")


@dataclass(frozen=True)
class SamplingWeights:
    """A normalized sampling distribution over the rows of a dataset."""

    probs: np.ndarray
    method: str
    delta: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).ravel()
        if probs.size == 0:
            raise ValueError("empty sampling distribution")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0.0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class Subsample:
    """Rows drawn with replacement, remembering indices and probabilities."""

    indices: np.ndarray
    probs: np.ndarray
    X: np.ndarray
    y: np.ndarray
    total_n: int
    family: Family

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    def as_weighted_sample(self) -> WeightedSample:
        return WeightedSample(self.X, self.y, self.probs, self.total_n, self.family)


def _build_alias_arrays(probs: np.ndarray):
    """Walker/Vose construction over index stacks; see AliasTable."""
    n = probs.shape[0]
    accept = np.empty(n)
    alias = np.empty(n, dtype=np.int64)
    scaled = probs * n
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] += scaled[s] - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # whatever remains sits at (numerically) probability 1/n
    for k in range(ns):
        accept[small[k]] = 1.0
        alias[small[k]] = small[k]
    for k in range(nl):
        accept[large[k]] = 1.0
        alias[large[k]] = large[k]
    return accept, alias


try:  # optional speedup; the pure-Python path gives identical tables
    from numba import njit as _njit

    _build_alias = _njit(cache=True)(_build_alias_arrays)
except ImportError:  # pragma: no cover
    _build_alias = _build_alias_arrays


class AliasTable:
    """Walker alias table: O(n) construction and O(1) per draw.

    Each cell i holds an acceptance probability and an alias index.  A
    draw picks a cell uniformly and keeps it with its acceptance
    probability, otherwise returns the alias.
    """

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float).ravel()
        if probs.size == 0:
            raise ValueError("empty probability vector")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0.0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(probs.sum())
        if total <= 0.0:
            raise DegenerateWeightsError("probabilities sum to zero")
        self.n = probs.shape[0]
        self._accept, self._alias = _build_alias(probs / total)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` indices with replacement."""
        idx = rng.integers(0, self.n, size=size)
        keep = rng.random(size) < self._accept[idx]
        return np.where(keep, idx, self._alias[idx])


def uniform_weights(n: int) -> SamplingWeights:
    """The uniform distribution over n rows."""
    if n < 1:
        raise ValueError("need at least one row")
    return SamplingWeights(np.full(n, 1.0 / n), method="UNIF")


def _residual_factor(data: FullData, beta, delta: float) -> np.ndarray:
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    resid = np.abs(data.y - data.family.mean(data.X @ np.asarray(beta, dtype=float)))
    if delta > 0.0:
        resid = np.maximum(resid, delta)
    return resid


def _normalize(num: np.ndarray, method: str, delta: float) -> SamplingWeights:
    total = float(num.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateWeightsError(
            f"all {method} sampling scores vanish; the fit is exact on every row"
        )
    return SamplingWeights(num / total, method=method, delta=delta)


def mv_probs(data: FullData, beta, info, delta: float = 0.0) -> SamplingWeights:
    """Variance-minimizing distribution: |residual| * |info^{-1} x|.

    ``info`` is a normalized information matrix, either the full-data
    one at ``beta`` or a pilot-subsample estimate of it.
    """
    resid = _residual_factor(data, beta, delta)
    info = np.asarray(info, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(info, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        raise SingularityError("information matrix is singular or indefinite") from None
    whitened = scipy.linalg.cho_solve((c, low), data.X.T, check_finite=False)
    norms = np.linalg.norm(whitened, axis=0)
    return _normalize(resid * norms, "mV", delta)


def mvc_probs(data: FullData, beta, delta: float = 0.0) -> SamplingWeights:
    """Score-variance-minimizing distribution: |residual| * |x|."""
    resid = _residual_factor(data, beta, delta)
    norms = np.linalg.norm(data.X, axis=1)
    return _normalize(resid * norms, "mVc", delta)


def leverage_weights(data: FullData, beta=None) -> SamplingWeights:
    """Statistical-leverage distribution, h_i / sum h.

    With ``beta`` given, rows are first rescaled by the square root of
    the conditional variance at that coefficient vector, the usual
    adjustment that maps leverage from linear to canonical-link models.
    """
    X = data.X
    method = "Lev"
    if beta is not None:
        curv = data.family.variance(X @ np.asarray(beta, dtype=float))
        X = X * np.sqrt(curv)[:, None]
        method = "LevA"
    q, _ = np.linalg.qr(X)
    lev = np.einsum("ij,ij->i", q, q)
    return _normalize(lev, method, 0.0)


def draw_subsample(
    data: FullData, weights: SamplingWeights, r: int, rng: np.random.Generator
) -> Subsample:
    """Draw ``r`` rows with replacement according to ``weights``."""
    if weights.n != data.n:
        raise ValueError(
            f"distribution covers {weights.n} rows but the data has {data.n}"
        )
    if r < 1:
        raise ValueError("subsample size must be at least 1")
    if weights.method == "UNIF":
        idx = rng.integers(0, data.n, size=r)
    else:
        idx = AliasTable(weights.probs).draw(rng, r)
    return Subsample(
        indices=idx,
        probs=weights.probs[idx],
        X=data.X[idx],
        y=data.y[idx],
        total_n=data.n,
        family=data.family,
    )
