"""FastAPI service exposing the estimators over HTTP.

The service owns dataset resolution (synthetic cases, CSV files on the
server, inline payloads) so that thin clients only ship configuration.
Package errors map to HTTP 400 with the exception type in the payload.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..datagen import CaseSpec, load_csv, make_case
from ..errors import GlmsubError
from ..experiments import (
    ExperimentConfig,
    run_allocation_experiment,
    run_coverage_experiment,
    run_mse_experiment,
    run_timing_benchmark,
)
from ..sampling import (
    draw_subsample,
    leverage_weights,
    mv_probs,
    mvc_probs,
    uniform_weights,
)
from ..solver import FullData, fit_mle, fit_weighted_mle
from ..twostep import TwoStepConfig, confidence_interval, two_step_estimate
from . import schemas

app = FastAPI(title="glmsub", version=__version__)


@app.exception_handler(GlmsubError)
async def _package_error(request: Request, exc: GlmsubError):
    return JSONResponse(
        status_code=400,
        content={"detail": str(exc), "type": type(exc).__name__},
    )


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    return JSONResponse(
        status_code=400, content={"detail": str(exc), "type": "ValueError"}
    )


def resolve_dataset(spec) -> tuple[FullData, np.ndarray | None, dict]:
    """Materialize a dataset spec; returns data, true beta if known, and
    a metadata echo for reports."""
    if spec.kind == "case":
        case = CaseSpec(
            case_id=spec.case_id,
            n=spec.n,
            p=spec.p,
            family=spec.family,
            beta_true=tuple(spec.beta_true) if spec.beta_true is not None else None,
        )
        rng = np.random.default_rng(spec.seed)
        data, beta_true = make_case(case, rng)
        meta = spec.model_dump()
        meta["beta_true"] = [float(b) for b in beta_true]
        return data, beta_true, meta
    if spec.kind == "csv":
        loaded = load_csv(
            spec.path,
            response_column=spec.response_column,
            covariate_columns=spec.covariate_columns,
            family=spec.family,
            add_intercept=spec.add_intercept,
            standardize=spec.standardize,
        )
        meta = spec.model_dump()
        meta.update(
            columns=list(loaded.columns),
            dropped_rows=loaded.dropped_rows,
            n=loaded.data.n,
            p=loaded.data.p,
        )
        return loaded.data, None, meta
    data = FullData(np.asarray(spec.x, dtype=float), np.asarray(spec.y), spec.family)
    return data, None, {"kind": "inline", "n": data.n, "p": data.p, "family": spec.family}


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/fit", response_model=schemas.FitResponse)
def fit(req: schemas.FitRequest) -> schemas.FitResponse:
    data, _, meta = resolve_dataset(req.dataset)
    result = fit_mle(data)
    return schemas.FitResponse(
        beta=[float(b) for b in result.beta],
        converged=result.converged,
        iterations=result.iterations,
        grad_norm=result.grad_norm,
        message=result.message,
        n=data.n,
        p=data.p,
        family=data.family.name,
    )


@app.post("/probs", response_model=schemas.ProbsResponse)
def probs(req: schemas.ProbsRequest) -> schemas.ProbsResponse:
    data, _, _ = resolve_dataset(req.dataset)
    if req.mode == "oracle":
        ref = fit_mle(data)
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence(req.seed, spawn_key=(255,))
        )
        pilot = draw_subsample(data, uniform_weights(data.n), req.pilot_size, rng)
        ref = fit_weighted_mle(pilot.as_weighted_sample())
    if req.method == "UNIF":
        w = uniform_weights(data.n)
    elif req.method == "mV":
        w = mv_probs(data, ref.beta, ref.info, delta=req.delta)
    elif req.method == "mVc":
        w = mvc_probs(data, ref.beta, delta=req.delta)
    elif req.method == "Lev":
        w = leverage_weights(data)
    else:
        w = leverage_weights(data, beta=ref.beta)
    return schemas.ProbsResponse(
        method=req.method,
        delta=w.delta,
        beta_ref=[float(b) for b in ref.beta],
        probs=[float(q) for q in w.probs],
    )


@app.post("/twostep", response_model=schemas.TwoStepResponse)
def twostep(req: schemas.TwoStepRequest) -> schemas.TwoStepResponse:
    data, _, _ = resolve_dataset(req.dataset)
    config = TwoStepConfig(
        pilot_size=req.pilot_size,
        refine_size=req.refine_size,
        method=req.method,
        delta=req.delta,
        info_mode=req.info_mode,
    )
    rng = np.random.default_rng(np.random.SeedSequence(req.seed, spawn_key=(254,)))
    est = two_step_estimate(data, config, rng)
    ints = [
        list(confidence_interval(est.beta, est.vcov, j, req.ci_level))
        for j in range(data.p)
    ]
    return schemas.TwoStepResponse(
        beta=[float(b) for b in est.beta],
        pilot_beta=[float(b) for b in est.pilot_beta],
        vcov=[[float(v) for v in row] for row in est.vcov],
        conf_int=ints,
        ci_level=req.ci_level,
        converged=est.converged,
        pilot_attempts=est.pilot_attempts,
    )


def _experiment_config(req, r_grid, **overrides) -> ExperimentConfig:
    fields = dict(
        methods=tuple(req.methods),
        pilot_size=req.pilot_size,
        r_grid=tuple(r_grid),
        n_reps=req.n_reps,
        seed=req.seed,
        delta=req.delta,
        ci_level=req.ci_level,
        include_raw=req.include_raw,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _report_response(report, meta) -> schemas.ReportResponse:
    report.meta = {"dataset": meta, "version": __version__}
    return schemas.ReportResponse(report=report.to_dict(), text=report.render())


@app.post("/experiments/mse", response_model=schemas.ReportResponse)
def mse(req: schemas.MseRequest) -> schemas.ReportResponse:
    data, beta_true, meta = resolve_dataset(req.dataset)
    config = _experiment_config(
        req,
        req.r_grid,
        squared_error=req.squared_error,
        include_mspe=req.include_mspe,
    )
    return _report_response(run_mse_experiment(data, config, beta_true), meta)


@app.post("/experiments/coverage", response_model=schemas.ReportResponse)
def coverage(req: schemas.CoverageRequest) -> schemas.ReportResponse:
    data, beta_true, meta = resolve_dataset(req.dataset)
    config = _experiment_config(req, req.r_grid, coverage_coord=req.coverage_coord)
    return _report_response(run_coverage_experiment(data, config, beta_true), meta)


@app.post("/experiments/allocation", response_model=schemas.ReportResponse)
def allocation(req: schemas.AllocationRequest) -> schemas.ReportResponse:
    data, beta_true, meta = resolve_dataset(req.dataset)
    config = _experiment_config(req, [1])
    report = run_allocation_experiment(
        data, config, req.budget, req.proportions, beta_true
    )
    return _report_response(report, meta)


@app.post("/experiments/timing", response_model=schemas.ReportResponse)
def timing(req: schemas.TimingRequest) -> schemas.ReportResponse:
    data, _, meta = resolve_dataset(req.dataset)
    config = _experiment_config(req, [req.refine_size], n_reps=1)
    report = run_timing_benchmark(
        data, config, reps=req.n_reps, warmup=req.warmup, include_full=req.include_full
    )
    return _report_response(report, meta)
