"""Shared test utilities: independent oracles kept deliberately simple.

The grid minimizer here is the reference for the optimality tests.  It
works on the integer lattice {counts / k : counts sum to k} inside the
probability simplex.  The objective sum(c_i / pi_i) is separable and
convex, and for that class a lattice point with no improving exchange
inside the search window is a global lattice minimum, so coarse-to-fine
refinement with re-centering finds the true grid argmin.
"""

from __future__ import annotations

import itertools

import numpy as np


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fd_gradient(f, x, h=1e-6):
    g = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def strip_timing(obj):
    """Drop wall-clock fields from a report structure, recursively."""
    if isinstance(obj, dict):
        return {
            k: strip_timing(v)
            for k, v in obj.items()
            if k not in ("time_ms", "wallclock_ms")
        }
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def spectral_via_eigh(M):
    """Extreme singular values through the Gram matrix eigendecomposition.

    Uses a different LAPACK routine than the SVD in the package, padding
    the spectrum with zeros when rows < columns.
    """
    M = np.asarray(M, dtype=float)
    n, p = M.shape
    lam = np.linalg.eigvalsh(M.T @ M)
    lam = np.clip(lam, 0.0, None)
    svals = np.sqrt(lam)
    if n < p:
        svals[: p - n] = 0.0
    return float(svals.max()), float(svals.min())


def trace_objective(coeffs, probs):
    """sum c_i / pi_i with the 0/0 convention; +inf when mass is missing."""
    coeffs = np.asarray(coeffs, dtype=float)
    probs = np.asarray(probs, dtype=float)
    out = 0.0
    for c, q in zip(coeffs, probs):
        if q > 0.0:
            out += c / q
        elif c > 0.0:
            return np.inf
    return out


def _batched_objective(coeffs, counts, k):
    """Vectorized objective over rows of integer count vectors."""
    probs = counts / float(k)
    with np.errstate(divide="ignore"):
        terms = coeffs[None, :] / probs
    terms = np.where(probs > 0.0, terms, np.where(coeffs[None, :] > 0.0, np.inf, 0.0))
    return terms.sum(axis=1)


def _compositions(k, n):
    """All nonnegative integer vectors of length n summing to k."""
    out = np.empty((0, n), dtype=np.int64)
    rows = []
    for cuts in itertools.combinations(range(k + n - 1), n - 1):
        prev = -1
        row = []
        for c in cuts:
            row.append(c - prev - 1)
            prev = c
        row.append(k + n - 2 - prev)
        rows.append(row)
    if rows:
        out = np.asarray(rows, dtype=np.int64)
    return out


def _refine(coeffs, center, k_old, k_new, window):
    """Best lattice point at denominator k_new near center/k_old."""
    n = center.size
    scaled = np.rint(center * (k_new // k_old)).astype(np.int64)
    # repair rounding so the counts still sum to k_new
    scaled[-1] = k_new - scaled[:-1].sum()
    offsets = np.arange(-window, window + 1, dtype=np.int64)
    grids = np.meshgrid(*([offsets] * (n - 1)), indexing="ij")
    cand_head = np.stack([g.ravel() for g in grids], axis=1) + scaled[:-1]
    for _ in range(50):
        tail = k_new - cand_head.sum(axis=1)
        ok = np.all(cand_head >= 0, axis=1) & (tail >= 0)
        counts = np.column_stack([cand_head[ok], tail[ok]])
        vals = _batched_objective(coeffs, counts, k_new)
        best = counts[int(np.argmin(vals))]
        on_edge = np.any(np.abs(best[:-1] - scaled[:-1]) >= window)
        if not on_edge:
            return best
        scaled = best.copy()
        cand_head = np.stack([g.ravel() for g in grids], axis=1) + scaled[:-1]
    return best


def make_oracle_instance(seed, n, p, family):
    """Tiny instance whose MLE exists and whose optimal probabilities sit
    comfortably inside the 1e-3 grid resolution.  Returns (data, fit)."""
    from glmsub import FullData, fit_mle, get_family, mv_probs, mvc_probs
    from glmsub.errors import SingularityError

    fam = get_family(family)
    for attempt in range(500):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(attempt,)))
        if family == "gaussian":
            X = rng.normal(0.0, 1.0, (n, p))
            beta = rng.normal(0.0, 1.0, p)
        else:
            X = rng.uniform(0.1, 1.0, (n, p))
            beta = rng.uniform(-0.5, 1.0, p)
        y = fam.sample(X @ beta, rng)
        if np.abs(y).max() > 50.0:
            continue
        data = FullData(X, y, fam)
        fit = fit_mle(data)
        if not fit.converged:
            continue
        resid = np.abs(y - fam.mean(X @ fit.beta))
        if resid.min() < 1e-2 or np.linalg.norm(X, axis=1).min() < 1e-2:
            continue
        try:
            pv = mv_probs(data, fit.beta, fit.info).probs
            pc = mvc_probs(data, fit.beta).probs
        except SingularityError:
            continue
        if min(pv.min(), pc.min()) >= 5e-3:
            return data, fit
    raise RuntimeError(f"no usable instance for seed {seed}")


def grid_minimize_trace(coeffs, final_step=1e-3):
    """Global minimizer of sum c_i/pi_i over the simplex grid of final_step.

    Returns (probs, value).  Exhaustive for n <= 3; coarse-to-fine with
    exchange-complete windows for n in 4..6.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.size
    k_final = int(round(1.0 / final_step))
    if n == 1:
        return np.array([1.0]), float(coeffs[0])
    if n == 2:
        i = np.arange(k_final + 1, dtype=np.int64)
        counts = np.column_stack([i, k_final - i])
        vals = _batched_objective(coeffs, counts, k_final)
        best = counts[int(np.argmin(vals))]
        return best / k_final, float(np.min(vals))
    if n == 3:
        i = np.repeat(np.arange(k_final + 1, dtype=np.int64),
                      np.arange(k_final + 1, 0, -1))
        j = np.concatenate(
            [np.arange(k_final + 1 - a, dtype=np.int64) for a in range(k_final + 1)]
        )
        counts = np.column_stack([i, j, k_final - i - j])
        vals = _batched_objective(coeffs, counts, k_final)
        best = counts[int(np.argmin(vals))]
        return best / k_final, float(np.min(vals))
    ladder = {4: [50, 250, 1000], 5: [25, 125, 1000], 6: [20, 100, 500, 1000]}[n]
    counts = _compositions(ladder[0], n)
    vals = _batched_objective(coeffs, counts, ladder[0])
    best = counts[int(np.argmin(vals))]
    k_old = ladder[0]
    for k_new in ladder[1:]:
        ratio = k_new // k_old
        best = _refine(coeffs, best, k_old, k_new, window=ratio + 2)
        k_old = k_new
    probs = best / float(k_final)
    return probs, trace_objective(coeffs, probs)
