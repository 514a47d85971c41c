"""Monte Carlo studies: estimation error, coverage, allocation, timing.

Every replicate gets its own generator derived from the master seed and
the cell coordinates (method, pilot size, refine size, replicate
index).  Streams therefore do not depend on the order cells run in,
and growing the replicate count leaves earlier replicates unchanged.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeightsError, PilotError, SingularityError
from .sampling import METHODS, leverage_weights, uniform_weights
from .solver import FullData, fit_mle
from .twostep import TwoStepConfig, single_stage_estimate, two_step_estimate

__all__ = [
    "ExperimentConfig",
    "CellResult",
    "Report",
    "replicate_rng",
    "compute_mspe",
    "run_mse_experiment",
    "run_coverage_experiment",
    "run_allocation_experiment",
    "run_timing_benchmark",
]

METHOD_IDS = {"UNIF": 0, "mV": 1, "mVc": 2, "Lev": 3, "LevA": 4, "FULL": 9}
TIMING_KEYS = ("time_ms", "wallclock_ms")
FAILURE_ERRORS = (PilotError, SingularityError, DegenerateWeightsError)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[str, ...] = ("mV", "mVc", "UNIF")
    pilot_size: int = 200
    r_grid: tuple[int, ...] = (300, 500, 700, 1000, 1200, 1400)
    n_reps: int = 500
    seed: int = 0
    delta: float = 1e-6
    ci_level: float = 0.95
    coverage_coord: int = 1
    squared_error: bool = False
    include_mspe: bool = False
    include_raw: bool = False
    info_mode: str = "pilot"

    def __post_init__(self):
        methods = tuple(self.methods)
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if not methods:
            raise ValueError("at least one method is required")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "r_grid", tuple(int(r) for r in self.r_grid))
        if any(r < 1 for r in self.r_grid) or not self.r_grid:
            raise ValueError("r_grid must contain positive sizes")
        if self.pilot_size < 1 or self.n_reps < 1:
            raise ValueError("pilot_size and n_reps must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.coverage_coord < 0:
            raise ValueError("coverage_coord must be nonnegative")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")


@dataclass
class CellResult:
    """Aggregates for one (method, sizes) cell; unused metrics stay None."""

    method: str
    pilot_size: int
    refine_size: int
    n_reps: int
    successes: int
    failures: int
    degraded: bool
    proportion: float | None = None
    error: float | None = None
    mspe: float | None = None
    coverage: float | None = None
    coverage_truth: float | None = None
    mean_ci_length: float | None = None
    time_ms: dict = field(default_factory=dict)
    values: list | None = None
    ci_lengths: list | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "pilot_size": self.pilot_size,
            "refine_size": self.refine_size,
            "proportion": self.proportion,
            "n_reps": self.n_reps,
            "successes": self.successes,
            "failures": self.failures,
            "degraded": self.degraded,
            "error": self.error,
            "mspe": self.mspe,
            "coverage": self.coverage,
            "coverage_truth": self.coverage_truth,
            "mean_ci_length": self.mean_ci_length,
            "time_ms": dict(self.time_ms),
            "values": self.values,
            "ci_lengths": self.ci_lengths,
        }


@dataclass
class Report:
    kind: str
    config: dict
    cells: list[CellResult]
    full_fit: dict
    meta: dict = field(default_factory=dict)
    wallclock_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": dict(self.config),
            "meta": dict(self.meta),
            "full_fit": dict(self.full_fit),
            "cells": [c.to_dict() for c in self.cells],
            "wallclock_ms": self.wallclock_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        return render_report(self)


def replicate_rng(seed: int, method: str, r0: int, r: int, k: int) -> np.random.Generator:
    """The generator for replicate k of a cell, stable across run layouts."""
    key = (METHOD_IDS[method], int(r0), int(r), int(k))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def compute_mspe(data: FullData, beta) -> float:
    """Mean squared prediction error of beta on the full data."""
    mu = data.family.mean(data.X @ np.asarray(beta, dtype=float))
    return float(np.mean((data.y - mu) ** 2))


def _estimate_once(data, method, r0, r, config, rng, cache):
    if method in ("mV", "mVc", "LevA"):
        ts = TwoStepConfig(
            pilot_size=r0,
            refine_size=r,
            method=method,
            delta=config.delta,
            info_mode=config.info_mode,
        )
        return two_step_estimate(data, ts, rng)
    if method == "UNIF":
        w = cache.setdefault("UNIF", uniform_weights(data.n))
    elif method == "Lev":
        w = cache.setdefault("Lev", leverage_weights(data))
    else:
        raise ValueError(f"unknown method {method!r}")
    return single_stage_estimate(data, w, r0 + r, rng)


def _summary_times(times: list) -> dict:
    if not times:
        return {"mean": None, "median": None}
    arr = np.asarray(times) * 1e3
    return {"mean": float(arr.mean()), "median": float(np.median(arr))}


def _fit_dict(fit) -> dict:
    return {
        "beta": [float(b) for b in fit.beta],
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
    }


def _config_dict(config: ExperimentConfig, **extra) -> dict:
    d = {
        "methods": list(config.methods),
        "pilot_size": config.pilot_size,
        "r_grid": list(config.r_grid),
        "n_reps": config.n_reps,
        "seed": config.seed,
        "delta": config.delta,
        "ci_level": config.ci_level,
        "coverage_coord": config.coverage_coord,
        "squared_error": config.squared_error,
        "include_mspe": config.include_mspe,
        "include_raw": config.include_raw,
        "info_mode": config.info_mode,
    }
    d.update(extra)
    return d


def _run_cell(data, config, full, method, r0, r, cache, beta_true, want_ci):
    """One Monte Carlo cell; returns a CellResult with raw values attached."""
    target = float(full.beta[config.coverage_coord]) if want_ci else None
    truth = None
    if want_ci and beta_true is not None:
        truth = float(np.asarray(beta_true)[config.coverage_coord])
    errors, mspes, lengths, times = [], [], [], []
    covered = covered_truth = 0
    failures = 0
    for k in range(config.n_reps):
        rng = replicate_rng(config.seed, method, r0, r, k)
        t0 = time.perf_counter()
        try:
            est = _estimate_once(data, method, r0, r, config, rng, cache)
        except FAILURE_ERRORS:
            failures += 1
            continue
        elapsed = time.perf_counter() - t0
        if not est.converged:
            failures += 1
            continue
        times.append(elapsed)
        diff = est.beta - full.beta
        errors.append(
            float(diff @ diff) if config.squared_error else float(np.linalg.norm(diff))
        )
        if config.include_mspe:
            mspes.append(compute_mspe(data, est.beta))
        if want_ci:
            lo, hi = est.confidence_interval(config.coverage_coord, config.ci_level)
            lengths.append(hi - lo)
            covered += int(lo <= target <= hi)
            if truth is not None:
                covered_truth += int(lo <= truth <= hi)
    ok = len(errors)
    cell = CellResult(
        method=method,
        pilot_size=r0,
        refine_size=r,
        n_reps=config.n_reps,
        successes=ok,
        failures=failures,
        degraded=failures > 0.1 * config.n_reps,
        error=float(np.mean(errors)) if ok else None,
        mspe=float(np.mean(mspes)) if mspes else None,
        coverage=covered / ok if want_ci and ok else None,
        coverage_truth=covered_truth / ok if truth is not None and ok else None,
        mean_ci_length=float(np.mean(lengths)) if lengths else None,
        time_ms=_summary_times(times),
    )
    if config.include_raw:
        cell.values = errors
        cell.ci_lengths = lengths if want_ci else None
    return cell


def _study(data, config, beta_true, want_ci, kind) -> Report:
    t0 = time.perf_counter()
    full = fit_mle(data)
    cache: dict = {}
    cells = [
        _run_cell(data, config, full, method, config.pilot_size, r, cache, beta_true, want_ci)
        for method in config.methods
        for r in config.r_grid
    ]
    return Report(
        kind=kind,
        config=_config_dict(config),
        cells=cells,
        full_fit=_fit_dict(full),
        wallclock_ms=(time.perf_counter() - t0) * 1e3,
    )


def run_mse_experiment(data: FullData, config: ExperimentConfig, beta_true=None) -> Report:
    """Average distance of subsample estimates from the full-data MLE."""
    return _study(data, config, beta_true, want_ci=False, kind="mse")


def run_coverage_experiment(
    data: FullData, config: ExperimentConfig, beta_true=None
) -> Report:
    """Interval coverage of one coordinate, judged against the full-data MLE."""
    return _study(data, config, beta_true, want_ci=True, kind="coverage")


def run_allocation_experiment(
    data: FullData,
    config: ExperimentConfig,
    budget: int,
    proportions,
    beta_true=None,
) -> Report:
    """Sweep the pilot share of a fixed draw budget.

    Two-stage methods get one cell per proportion; UNIF and Lev spend
    the whole budget in a single stage and appear once.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    proportions = [float(q) for q in proportions]
    if any(not 0.0 < q <= 1.0 for q in proportions):
        raise ValueError("proportions must lie in (0, 1]")
    t0 = time.perf_counter()
    full = fit_mle(data)
    cache: dict = {}
    cells = []
    for method in config.methods:
        if method in ("UNIF", "Lev"):
            cell = _run_cell(data, config, full, method, budget, 0, cache, beta_true, False)
            cells.append(cell)
            continue
        for q in proportions:
            r0 = int(round(q * budget))
            if r0 < data.p + 1:
                raise ValueError(
                    f"proportion {q} gives a pilot of {r0} rows; "
                    f"need at least p+1 = {data.p + 1}"
                )
            cell = _run_cell(
                data, config, full, method, r0, budget - r0, cache, beta_true, False
            )
            cell.proportion = q
            cells.append(cell)
    return Report(
        kind="allocation",
        config=_config_dict(config, budget=budget, proportions=proportions),
        cells=cells,
        full_fit=_fit_dict(full),
        wallclock_ms=(time.perf_counter() - t0) * 1e3,
    )


def run_timing_benchmark(
    data: FullData,
    config: ExperimentConfig,
    reps: int = 50,
    warmup: int = 5,
    include_full: bool = True,
) -> Report:
    """Wall-clock comparison of the estimators, plus the full-data fit.

    Runs the complete pipeline of each method (probabilities, draws,
    fits) ``reps`` times after ``warmup`` discarded runs; only the
    refine size ``r_grid[0]`` is used.
    """
    if reps < 1 or warmup < 0:
        raise ValueError("need reps >= 1 and warmup >= 0")
    t0 = time.perf_counter()
    full = fit_mle(data)
    cache: dict = {}
    r = config.r_grid[0]
    methods = list(config.methods) + (["FULL"] if include_full else [])
    cells = []
    for method in methods:
        times = []
        failures = 0
        for k in range(warmup + reps):
            rng = replicate_rng(config.seed, method, config.pilot_size, r, k)
            t1 = time.perf_counter()
            try:
                if method == "FULL":
                    fit_mle(data)
                else:
                    _estimate_once(data, method, config.pilot_size, r, config, rng, cache)
            except FAILURE_ERRORS:
                failures += 1
                continue
            if k >= warmup:
                times.append(time.perf_counter() - t1)
        cells.append(
            CellResult(
                method=method,
                pilot_size=config.pilot_size,
                refine_size=r,
                n_reps=reps,
                successes=len(times),
                failures=failures,
                degraded=failures > 0.1 * (warmup + reps),
                time_ms=_summary_times(times),
            )
        )
    return Report(
        kind="timing",
        config=_config_dict(config, reps=reps, warmup=warmup),
        cells=cells,
        full_fit=_fit_dict(full),
        wallclock_ms=(time.perf_counter() - t0) * 1e3,
    )


def _fmt(value, width, nd=4):
    if value is None:
        return " " * (width - 1) + "-"
    if isinstance(value, float):
        return f"{value:{width}.{nd}g}"
    return f"{value:{width}}"


def render_report(report: Report) -> str:
    """Plain-text table for terminal output."""
    spec = {
        "mse": [("method", 8), ("r0", 6), ("r", 6), ("ok", 5), ("fail", 5),
                ("error", 11), ("mspe", 11), ("med_ms", 9)],
        "coverage": [("method", 8), ("r0", 6), ("r", 6), ("ok", 5), ("fail", 5),
                     ("coverage", 9), ("ci_len", 11), ("med_ms", 9)],
        "allocation": [("method", 8), ("share", 7), ("r0", 6), ("r", 6), ("ok", 5),
                       ("fail", 5), ("error", 11)],
        "timing": [("method", 8), ("r0", 6), ("r", 6), ("ok", 5),
                   ("med_ms", 10), ("mean_ms", 10)],
    }[report.kind]
    getters = {
        "method": lambda c: c.method,
        "r0": lambda c: c.pilot_size,
        "r": lambda c: c.refine_size,
        "share": lambda c: c.proportion,
        "ok": lambda c: c.successes,
        "fail": lambda c: c.failures,
        "error": lambda c: c.error,
        "mspe": lambda c: c.mspe,
        "coverage": lambda c: c.coverage,
        "ci_len": lambda c: c.mean_ci_length,
        "med_ms": lambda c: c.time_ms.get("median"),
        "mean_ms": lambda c: c.time_ms.get("mean"),
    }
    lines = ["  ".join(f"{name:>{w}}" for name, w in spec)]
    for cell in report.cells:
        lines.append("  ".join(_fmt(getters[name](cell), w) for name, w in spec))
    beta = ", ".join(f"{b:.6g}" for b in report.full_fit["beta"])
    lines.append(f"full-data fit: [{beta}]")
    return "\n".join(lines)
