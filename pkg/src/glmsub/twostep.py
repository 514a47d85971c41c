"""Two-stage subsampled estimation with inverse-probability weighting.

Stage one draws a small pilot (uniform by default), fits a weighted
pilot estimate, and turns it into an importance distribution.  Stage
two draws the main subsample from that distribution and maximizes the
pooled weighted likelihood over all draws, each draw keeping the
probability it was taken with.  A plug-in sandwich estimator provides
the variance of the pooled estimate around the full-data MLE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ndtri

from .errors import PilotError, SingularityError
from .families import Family
from .sampling import (
    SamplingWeights,
    Subsample,
    draw_subsample,
    leverage_weights,
    mv_probs,
    mvc_probs,
    uniform_weights,
)
from .solver import FitResult, FullData, WeightedSample, fit_weighted_mle, observed_information

__all__ = [
    "TwoStepConfig",
    "SubsampleEstimate",
    "two_step_estimate",
    "single_stage_estimate",
    "estimate_variance",
    "confidence_interval",
    "asymptotic_variance_opt",
]

TWO_STEP_METHODS = ("mV", "mVc", "LevA")


@dataclass(frozen=True)
class TwoStepConfig:
    """Sizes and choices for a two-stage run.

    ``info_mode`` controls the information matrix inside the mV
    distribution: "pilot" reuses the weighted pilot information (no
    full-data pass), "full" recomputes it on all rows at the pilot
    estimate.
    """

    pilot_size: int
    refine_size: int
    method: str = "mV"
    delta: float = 1e-6
    info_mode: str = "pilot"
    pilot_weights: SamplingWeights | None = None
    max_pilot_attempts: int = 3

    def __post_init__(self):
        if self.pilot_size < 1:
            raise ValueError("pilot_size must be at least 1")
        if self.refine_size < 0:
            raise ValueError("refine_size must be nonnegative")
        if self.method not in TWO_STEP_METHODS:
            raise ValueError(
                f"method must be one of {TWO_STEP_METHODS}, got {self.method!r}"
            )
        if self.info_mode not in ("pilot", "full"):
            raise ValueError(f"info_mode must be 'pilot' or 'full', got {self.info_mode!r}")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.max_pilot_attempts < 1:
            raise ValueError("max_pilot_attempts must be at least 1")


@dataclass(frozen=True)
class SubsampleEstimate:
    """A subsample-based estimate with its plug-in variance."""

    beta: np.ndarray
    vcov: np.ndarray
    sample: WeightedSample
    method: str
    converged: bool
    iterations: int
    pilot_beta: np.ndarray | None = None
    pilot_converged: bool | None = None
    pilot_attempts: int = 0

    def confidence_interval(self, coord: int, level: float = 0.95):
        return confidence_interval(self.beta, self.vcov, coord, level)


def _fit_pilot(data: FullData, config: TwoStepConfig, rng) -> tuple[Subsample, FitResult, int]:
    weights = config.pilot_weights or uniform_weights(data.n)
    if weights.n != data.n:
        raise ValueError("pilot distribution does not match the dataset size")
    last_message = ""
    for attempt in range(1, config.max_pilot_attempts + 1):
        pilot = draw_subsample(data, weights, config.pilot_size, rng)
        try:
            fit = fit_weighted_mle(pilot.as_weighted_sample())
        except SingularityError as exc:
            last_message = str(exc)
            continue
        if fit.converged:
            return pilot, fit, attempt
        last_message = fit.message or "pilot fit did not converge"
    raise PilotError(
        f"pilot stage failed after {config.max_pilot_attempts} attempts: {last_message}"
    )


def _stage_weights(
    data: FullData, config: TwoStepConfig, pilot_fit: FitResult
) -> SamplingWeights:
    beta0 = pilot_fit.beta
    if config.method == "mV":
        if config.info_mode == "pilot":
            info = pilot_fit.info
        else:
            info = observed_information(data.family, data.X, beta0)
        return mv_probs(data, beta0, info, delta=config.delta)
    if config.method == "mVc":
        return mvc_probs(data, beta0, delta=config.delta)
    return leverage_weights(data, beta=beta0)


def _pooled_sample(pilot: Subsample, refine: Subsample | None) -> WeightedSample:
    if refine is None:
        return pilot.as_weighted_sample()
    return WeightedSample(
        X=np.vstack([pilot.X, refine.X]),
        y=np.concatenate([pilot.y, refine.y]),
        probs=np.concatenate([pilot.probs, refine.probs]),
        total_n=pilot.total_n,
        family=pilot.family,
    )


def two_step_estimate(
    data: FullData, config: TwoStepConfig, rng: np.random.Generator
) -> SubsampleEstimate:
    """Run both stages and return the pooled weighted estimate.

    The pilot is redrawn up to ``max_pilot_attempts`` times if its fit
    fails; after that a PilotError propagates.  With ``refine_size`` 0
    the pilot fit itself is returned (with its variance), which makes
    budget-allocation sweeps well defined end to end.
    """
    pilot, pilot_fit, attempts = _fit_pilot(data, config, rng)
    if config.refine_size == 0:
        combined = pilot.as_weighted_sample()
        final = pilot_fit
    else:
        weights = _stage_weights(data, config, pilot_fit)
        refine = draw_subsample(data, weights, config.refine_size, rng)
        combined = _pooled_sample(pilot, refine)
        final = fit_weighted_mle(combined, init=pilot_fit.beta)
    vcov = estimate_variance(combined, final.beta)
    return SubsampleEstimate(
        beta=final.beta,
        vcov=vcov,
        sample=combined,
        method=config.method,
        converged=final.converged,
        iterations=final.iterations,
        pilot_beta=pilot_fit.beta,
        pilot_converged=pilot_fit.converged,
        pilot_attempts=attempts,
    )


def single_stage_estimate(
    data: FullData,
    weights: SamplingWeights,
    size: int,
    rng: np.random.Generator,
    init=None,
) -> SubsampleEstimate:
    """Draw once from a fixed distribution and fit; used for UNIF and Lev."""
    sub = draw_subsample(data, weights, size, rng)
    sample = sub.as_weighted_sample()
    fit = fit_weighted_mle(sample, init=init)
    vcov = estimate_variance(sample, fit.beta)
    return SubsampleEstimate(
        beta=fit.beta,
        vcov=vcov,
        sample=sample,
        method=weights.method,
        converged=fit.converged,
        iterations=fit.iterations,
    )


def estimate_variance(sample: WeightedSample, beta) -> np.ndarray:
    """Plug-in sandwich variance of a weighted subsample estimate.

    With m draws from a source of n rows, the bread is the weighted
    information ``(n m)^{-1} sum psi'' x x' / prob`` and the meat is
    ``(n m)^{-2} sum resid^2 x x' / prob^2``; the result is symmetrized.
    """
    beta = np.asarray(beta, dtype=float)
    X, y, probs = sample.X, sample.y, sample.probs
    n = float(sample.total_n)
    m = float(sample.m)
    theta = X @ beta
    curv = sample.family.variance(theta)
    resid = y - sample.family.mean(theta)
    bread = (X * (curv / probs)[:, None]).T @ X / (n * m)
    meat = (X * (resid**2 / probs**2)[:, None]).T @ X / (n * m) ** 2
    try:
        c, low = scipy.linalg.cho_factor(bread, check_finite=False)
        half = scipy.linalg.cho_solve((c, low), meat, check_finite=False)
        v = scipy.linalg.cho_solve((c, low), half.T, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        raise SingularityError(
            "weighted information is singular; variance is not identified"
        ) from None
    return 0.5 * (v + v.T)


def confidence_interval(beta, vcov, coord: int, level: float = 0.95):
    """Normal-theory interval for one coordinate: beta_j +/- z * sqrt(V_jj)."""
    beta = np.asarray(beta, dtype=float)
    vcov = np.asarray(vcov, dtype=float)
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    if not 0 <= coord < beta.shape[0]:
        raise ValueError(f"coordinate {coord} out of range for p={beta.shape[0]}")
    var = float(vcov[coord, coord])
    if var < 0.0:
        raise ValueError("negative variance entry; the estimate is unusable")
    half = float(ndtri(0.5 + level / 2.0)) * float(np.sqrt(var))
    center = float(beta[coord])
    return center - half, center + half


def asymptotic_variance_opt(
    data: FullData, beta, method: str, r: int, delta: float = 0.0
) -> np.ndarray:
    """Asymptotic variance of the pooled estimate under an optimal distribution.

    Evaluated at a reference ``beta`` (normally the full-data MLE) for
    ``r`` optimally drawn rows.  The score-variance factor is a product
    of two averages, one over whitened outer products and one over the
    sampling scores, so thresholded distributions (``delta`` > 0) are
    covered by the same expression.
    """
    if method not in ("mV", "mVc"):
        raise ValueError(f"method must be 'mV' or 'mVc', got {method!r}")
    if r < 1:
        raise ValueError("r must be at least 1")
    beta = np.asarray(beta, dtype=float)
    X, y = data.X, data.y
    n = float(data.n)
    resid = np.abs(y - data.family.mean(X @ beta))
    floored = np.maximum(resid, delta) if delta > 0.0 else resid

    info = observed_information(data.family, X, beta)
    try:
        c, low = scipy.linalg.cho_factor(info, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        raise SingularityError("information matrix is singular or indefinite") from None

    if method == "mV":
        norms = np.linalg.norm(
            scipy.linalg.cho_solve((c, low), X.T, check_finite=False), axis=0
        )
    else:
        norms = np.linalg.norm(X, axis=1)
    scorev = floored * norms

    ratio = np.zeros_like(scorev)
    np.divide(resid**2, scorev, out=ratio, where=scorev > 0.0)
    middle = (X * ratio[:, None]).T @ X / n * float(scorev.mean()) / float(r)

    half = scipy.linalg.cho_solve((c, low), middle, check_finite=False)
    v = scipy.linalg.cho_solve((c, low), half.T, check_finite=False)
    return 0.5 * (v + v.T)
