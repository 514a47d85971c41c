"""Maximum-likelihood fitting for canonical-link models.

One Newton loop with step halving serves both the full-data likelihood
and inverse-probability-weighted subsample likelihoods; the weighted
case only changes the per-row weights and the normalizer of the
reported information matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularityError
from .families import Family, get_family

__all__ = [
    "FullData",
    "WeightedSample",
    "FitResult",
    "log_likelihood",
    "score",
    "observed_information",
    "fit_mle",
    "fit_weighted_mle",
]

MAX_ITER = 100
STEP_TOL = 1e-8
SCORE_TOL = 1e-8
MAX_HALVINGS = 30
RIDGE_SCALE = 1e-10
# when the largest Bernoulli variance drops below this, every fitted
# probability is within ~1e-6 of 0 or 1 and the score is vanishing only
# because the data are separated, not because a maximizer was reached
SEPARATION_EPS = 1e-6


@dataclass(frozen=True)
class FullData:
    """A validated design matrix, response vector and family."""

    X: np.ndarray
    y: np.ndarray
    family: Family

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError(f"design matrix must be 2-d, got shape {X.shape}")
        if X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError("dataset must have at least one row and one column")
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"response length {y.shape[0]} does not match {X.shape[0]} rows"
            )
        if not np.all(np.isfinite(X)):
            raise DomainError("design matrix contains non-finite entries")
        family = get_family(self.family)
        family.check_response(y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "family", family)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class WeightedSample:
    """Rows drawn with replacement plus their drawing probabilities.

    ``probs[i]`` is the probability with which draw ``i`` was selected
    from a source dataset of ``total_n`` rows.  The fitting weight of a
    draw is ``1 / (m * probs[i])`` with ``m`` the number of draws, so a
    sample that enumerates the full dataset under uniform probabilities
    reproduces the unweighted likelihood exactly.
    """

    X: np.ndarray
    y: np.ndarray
    probs: np.ndarray
    total_n: int
    family: Family

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        probs = np.asarray(self.probs, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError(f"sample matrix must be 2-d and nonempty, got {X.shape}")
        if y.shape[0] != X.shape[0] or probs.shape[0] != X.shape[0]:
            raise ValueError("sample rows, responses and probabilities must align")
        if not np.all(np.isfinite(X)):
            raise DomainError("sample matrix contains non-finite entries")
        if np.any(~np.isfinite(probs)) or np.any(probs <= 0.0) or np.any(probs > 1.0):
            raise ValueError("drawing probabilities must lie in (0, 1]")
        if self.total_n < 1:
            raise ValueError("total_n must be a positive source size")
        family = get_family(self.family)
        family.check_response(y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "family", family)

    @property
    def m(self) -> int:
        """Number of draws in the sample."""
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def weights(self) -> np.ndarray:
        """Inverse-probability fitting weights, one per draw."""
        return 1.0 / (self.m * self.probs)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a Newton fit.

    ``info`` is the observed information at ``beta`` divided by the
    source size, i.e. ``sum_i w_i * psi''(x_i beta) x_i x_i' / n``.
    """

    beta: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    info: np.ndarray
    message: str = ""


def log_likelihood(family, X, y, beta, weights=None) -> float:
    """Sum of per-row log-likelihood kernels ``y * theta - psi(theta)``."""
    family = get_family(family)
    theta = X @ beta
    terms = y * theta - family.psi(theta)
    if weights is not None:
        terms = weights * terms
    return float(terms.sum())


def score(family, X, y, beta, weights=None) -> np.ndarray:
    """Gradient of the (weighted) log-likelihood with respect to beta."""
    family = get_family(family)
    resid = y - family.mean(X @ beta)
    if weights is not None:
        resid = weights * resid
    return X.T @ resid


def observed_information(family, X, beta, weights=None, normalizer=None) -> np.ndarray:
    """Normalized negative Hessian ``sum_i w_i psi''(theta_i) x_i x_i' / n``.

    ``normalizer`` defaults to the number of rows passed in; pass the
    source size when the rows come from a weighted subsample.
    """
    family = get_family(family)
    curv = family.variance(X @ beta)
    if weights is not None:
        curv = weights * curv
    H = (X * curv[:, None]).T @ X
    div = float(X.shape[0] if normalizer is None else normalizer)
    return H / div


def _solve_newton_step(H, g, iteration):
    """Solve H step = g, adding one tiny ridge on a singular Hessian."""
    try:
        c, low = scipy.linalg.cho_factor(H, check_finite=False)
        return scipy.linalg.cho_solve((c, low), g, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    ridge = RIDGE_SCALE * np.trace(H) / H.shape[0]
    if not np.isfinite(ridge) or ridge <= 0.0:
        ridge = RIDGE_SCALE
    try:
        c, low = scipy.linalg.cho_factor(
            H + ridge * np.eye(H.shape[0]), check_finite=False
        )
        return scipy.linalg.cho_solve((c, low), g, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        raise SingularityError(
            f"Hessian is numerically singular at Newton iteration {iteration}"
        ) from None


def _newton(family, X, y, weights, init, weight_total):
    """Shared Newton loop.  Returns (beta, converged, iterations, gnorm, message)."""
    beta = np.zeros(X.shape[1]) if init is None else np.asarray(init, dtype=float).copy()
    if beta.shape != (X.shape[1],):
        raise ValueError(f"init must have shape ({X.shape[1]},), got {beta.shape}")
    y_scale = max(1.0, float(np.abs(y).max()))
    gtol = SCORE_TOL * y_scale * weight_total
    ll = log_likelihood(family, X, y, beta, weights)
    if not np.isfinite(ll):
        raise DomainError("log-likelihood is not finite at the starting point")
    message = ""
    converged = False
    iterations = 0
    gnorm = np.inf

    for it in range(1, MAX_ITER + 1):
        theta = X @ beta
        curv = family.variance(theta)
        resid = y - family.mean(theta)
        separated = family.name == "bernoulli" and float(curv.max()) <= SEPARATION_EPS
        if weights is not None:
            curv = weights * curv
            resid = weights * resid
        g = X.T @ resid
        gnorm = float(np.abs(g).max())
        if separated:
            # the score also vanishes here, so test this before convergence
            message = (
                "every fitted probability is numerically 0 or 1; "
                "the data are likely separated and no finite maximizer exists"
            )
            break
        if gnorm <= gtol:
            converged = True
            break
        H = (X * curv[:, None]).T @ X
        step = _solve_newton_step(H, g, it)
        iterations = it

        scale = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            cand = beta + scale * step
            # an overlong step can push the weighted terms past the float
            # range; the non-finite result is rejected below, so the
            # transient overflow is not worth a warning
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    ll_cand = log_likelihood(family, X, y, cand, weights)
            except DomainError:
                ll_cand = -np.inf
            if np.isfinite(ll_cand) and ll_cand >= ll - 1e-12 * (1.0 + abs(ll)):
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            message = f"line search failed to improve the likelihood at iteration {it}"
            break

        moved = float(np.linalg.norm(cand - beta))
        beta = cand
        ll = ll_cand
        if moved <= STEP_TOL * (1.0 + float(np.linalg.norm(beta))):
            converged = True
            theta = X @ beta
            resid = y - family.mean(theta)
            if weights is not None:
                resid = weights * resid
            gnorm = float(np.abs(X.T @ resid).max())
            break
    else:
        message = f"no convergence within {MAX_ITER} iterations"

    return beta, converged, iterations, gnorm, message


def fit_mle(data: FullData, init=None) -> FitResult:
    """Fit the full-data maximum-likelihood estimate by Newton iterations."""
    beta, converged, iters, gnorm, msg = _newton(
        data.family, data.X, data.y, None, init, float(data.n)
    )
    info = observed_information(data.family, data.X, beta)
    return FitResult(beta, converged, iters, gnorm, info, msg)


def fit_weighted_mle(sample: WeightedSample, init=None) -> FitResult:
    """Maximize the inverse-probability-weighted likelihood of a subsample.

    The reported information matrix is normalized by the source size
    ``total_n``, matching the scale of the full-data information.
    """
    w = sample.weights()
    beta, converged, iters, gnorm, msg = _newton(
        sample.family, sample.X, sample.y, w, init, float(w.sum())
    )
    info = observed_information(
        sample.family, sample.X, beta, weights=w, normalizer=sample.total_n
    )
    return FitResult(beta, converged, iters, gnorm, info, msg)
