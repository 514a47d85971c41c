"""Spectral diagnostics and subsample-size guidance.

These functions describe how well a weighted subsample can stand in for
the full design matrix: the spread of the design spectrum, a high
probability bound on the prediction error of a subsample estimate, the
subsample size that makes the spectrum-preservation condition hold, and
a direct Monte Carlo check of that condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import SamplingWeights, draw_subsample
from .solver import FitResult, FullData

__all__ = [
    "SpectralSummary",
    "spectral_summary",
    "prediction_error_bound",
    "recommended_subsample_size",
    "check_singular_condition",
]


@dataclass(frozen=True)
class SpectralSummary:
    sigma_max: float
    sigma_min: float
    cond: float


def spectral_summary(M) -> SpectralSummary:
    """Extreme singular values over the full column dimension.

    When the matrix has fewer rows than columns the missing part of the
    spectrum is zero, so sigma_min is 0 and the condition number is
    infinite; rank collapse is reported rather than hidden.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    svals = np.linalg.svd(M, compute_uv=False)
    p = M.shape[1]
    if svals.shape[0] < p:
        svals = np.concatenate([svals, np.zeros(p - svals.shape[0])])
    smax = float(svals.max())
    smin = float(svals.min())
    cond = math.inf if smin == 0.0 else smax / smin
    return SpectralSummary(smax, smin, cond)


def _alpha(fit: FitResult, method: str) -> float:
    if method == "mV":
        return spectral_summary(fit.info).cond
    if method == "mVc":
        return 1.0
    raise ValueError(f"method must be 'mV' or 'mVc', got {method!r}")


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0 / 3.0:
        raise ValueError("eps must lie in (0, 1/3)")


def prediction_error_bound(
    data: FullData, fit: FitResult, r: int, eps: float, method: str
) -> float:
    """High-probability bound on |mean(X beta_hat) - mean(X beta_sub)|.

    Holds with probability at least 1 - eps when the subsample preserves
    the smallest squared singular value of the design up to a factor of
    one half.  The alpha factor is the condition number of the inverse
    information for mV and 1 for mVc.
    """
    _check_eps(eps)
    if r < 1:
        raise ValueError("r must be at least 1")
    spec = spectral_summary(data.X)
    resid_norm = float(
        np.linalg.norm(data.y - data.family.mean(data.X @ fit.beta))
    )
    return (
        8.0
        * _alpha(fit, method)
        * spec.cond**2
        * math.sqrt(data.p * math.log(1.0 / eps) / r)
        * resid_norm
    )


def recommended_subsample_size(
    data: FullData, fit: FitResult, eps: float, method: str, c_d: float = 1.0
) -> int:
    """Smallest r for which the spectrum-preservation condition is guaranteed
    with probability at least 1 - eps.

    ``c_d`` <= 1 is the constant relating the spectral and Frobenius
    norms for this design; 1 is always valid, a sharper value shrinks
    the recommendation quadratically.
    """
    _check_eps(eps)
    if not 0.0 < c_d <= 1.0:
        raise ValueError("c_d must lie in (0, 1]")
    spec = spectral_summary(data.X)
    rank_cut = spec.sigma_max * max(data.X.shape) * np.finfo(float).eps
    if spec.sigma_min <= rank_cut:
        raise ValueError("design matrix is rank deficient; no finite size works")
    alpha = _alpha(fit, method)
    r = (
        64.0
        * c_d**2
        * math.log(1.0 / eps)
        * spec.cond**4
        * alpha**2
        * data.p**2
    )
    return int(math.ceil(r))


def check_singular_condition(
    data: FullData,
    weights: SamplingWeights,
    r: int,
    rng: np.random.Generator,
) -> bool:
    """Draw one subsample and test sigma_min^2 >= 0.5 sigma_min^2(X).

    The subsampled design rescales each drawn row by 1/sqrt(r * prob),
    which makes its Gram matrix an unbiased estimate of X'X.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    sub = draw_subsample(data, weights, r, rng)
    scaled = sub.X / np.sqrt(r * sub.probs)[:, None]
    smin_sub = spectral_summary(scaled).sigma_min
    smin_full = spectral_summary(data.X).sigma_min
    return smin_sub**2 >= 0.5 * smin_full**2
