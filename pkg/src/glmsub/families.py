"""Exponential-family kernels for canonical-link models.

Each family is described by its log-partition function ``psi`` and the
first three derivatives.  Under the canonical link the conditional
density of a response given the linear score ``theta = x @ beta`` is
``h(y) * exp(y * theta - psi(theta))``, so the derivatives of ``psi``
are the conditional cumulants: mean, variance, third cumulant.

All evaluators are vectorized over numpy arrays and written to stay
finite for scores far outside the usual fitting range.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import DomainError

__all__ = ["Family", "Gaussian", "Poisson", "Bernoulli", "get_family", "FAMILIES"]


def _as_scores(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("linear scores must be finite")
    return arr


class Family:
    """Base class.  Subclasses provide psi, its derivatives, and sampling."""

    name: str = "?"

    def psi(self, theta: np.ndarray) -> np.ndarray:
        """Log-partition function evaluated elementwise."""
        raise NotImplementedError

    def mean(self, theta: np.ndarray) -> np.ndarray:
        """First derivative of psi: the conditional mean."""
        raise NotImplementedError

    def variance(self, theta: np.ndarray) -> np.ndarray:
        """Second derivative of psi: the conditional variance."""
        raise NotImplementedError

    def third_cumulant(self, theta: np.ndarray) -> np.ndarray:
        """Third derivative of psi."""
        raise NotImplementedError

    def psi_deriv(self, theta: np.ndarray, order: int) -> np.ndarray:
        """Derivative of psi of the requested order (1, 2 or 3)."""
        if order == 1:
            return self.mean(theta)
        if order == 2:
            return self.variance(theta)
        if order == 3:
            return self.third_cumulant(theta)
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order!r}")

    def sample(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one response per score, deterministic given the generator."""
        raise NotImplementedError

    def check_response(self, y: np.ndarray) -> None:
        """Raise DomainError if the response vector is invalid for this family."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}()"


def _bad_rows(mask: np.ndarray) -> str:
    idx = np.flatnonzero(mask)
    shown = ", ".join(str(i) for i in idx[:5])
    more = "" if idx.size <= 5 else f" (and {idx.size - 5} more)"
    return f"rows [{shown}]{more}"


class Gaussian(Family):
    """Identity link, unit dispersion: psi(theta) = theta**2 / 2."""

    name = "gaussian"

    def psi(self, theta):
        t = _as_scores(theta)
        return 0.5 * t * t

    def mean(self, theta):
        return _as_scores(theta)

    def variance(self, theta):
        return np.ones_like(_as_scores(theta))

    def third_cumulant(self, theta):
        return np.zeros_like(_as_scores(theta))

    def sample(self, theta, rng):
        t = _as_scores(theta)
        return t + rng.standard_normal(t.shape)

    def check_response(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise DomainError(
                "gaussian response must be finite; " + _bad_rows(~np.isfinite(y))
            )


class Poisson(Family):
    """Log link: psi(theta) = exp(theta), so all derivatives coincide."""

    name = "poisson"

    def _rate(self, theta):
        t = _as_scores(theta)
        with np.errstate(over="ignore"):
            lam = np.exp(t)
        if not np.all(np.isfinite(lam)):
            raise DomainError("score too large: exp(theta) overflows")
        return lam

    def psi(self, theta):
        return self._rate(theta)

    mean = psi
    variance = psi
    third_cumulant = psi

    def sample(self, theta, rng):
        return rng.poisson(self._rate(theta)).astype(float)

    def check_response(self, y):
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y) & (y >= 0) & (np.mod(y, 1.0) == 0)
        if not np.all(ok):
            raise DomainError(
                "poisson response must be a nonnegative count; " + _bad_rows(~ok)
            )


class Bernoulli(Family):
    """Logit link: psi(theta) = log(1 + exp(theta)), evaluated stably."""

    name = "bernoulli"

    def psi(self, theta):
        t = _as_scores(theta)
        # log(1 + e^t) = max(t, 0) + log1p(e^{-|t|}) avoids overflow for t >> 0
        return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))

    def mean(self, theta):
        return expit(_as_scores(theta))

    def variance(self, theta):
        mu = self.mean(theta)
        return mu * (1.0 - mu)

    def third_cumulant(self, theta):
        mu = self.mean(theta)
        return mu * (1.0 - mu) * (1.0 - 2.0 * mu)

    def sample(self, theta, rng):
        return rng.binomial(1, self.mean(theta)).astype(float)

    def check_response(self, y):
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y) & ((y == 0.0) | (y == 1.0))
        if not np.all(ok):
            raise DomainError("bernoulli response must be 0 or 1; " + _bad_rows(~ok))


FAMILIES: dict[str, Family] = {
    f.name: f for f in (Gaussian(), Poisson(), Bernoulli())
}


def get_family(name) -> Family:
    """Look up a family by name (case-insensitive); pass instances through."""
    if isinstance(name, Family):
        return name
    try:
        return FAMILIES[str(name).lower()]
    except KeyError:
        known = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown family {name!r}; choose one of: {known}") from None
