"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field

FamilyName = Literal["gaussian", "poisson", "bernoulli"]
MethodName = Literal["UNIF", "mV", "mVc", "Lev", "LevA"]


class CaseDataset(BaseModel):
    """A synthetic benchmark dataset, generated server-side from a seed."""

    kind: Literal["case"] = "case"
    case_id: int = Field(ge=1, le=4)
    n: int = Field(gt=0)
    p: int = Field(default=7, gt=0)
    family: FamilyName = "poisson"
    beta_true: list[float] | None = None
    seed: int = Field(default=0, ge=0)


class CsvDataset(BaseModel):
    """A dataset read from a CSV file visible to the server."""

    kind: Literal["csv"] = "csv"
    path: str
    response_column: str
    covariate_columns: list[str] | None = None
    family: FamilyName = "gaussian"
    add_intercept: bool = False
    standardize: bool = False


class InlineDataset(BaseModel):
    """A small dataset passed directly in the request body."""

    kind: Literal["inline"] = "inline"
    x: list[list[float]]
    y: list[float]
    family: FamilyName = "gaussian"


Dataset = Annotated[
    Union[CaseDataset, CsvDataset, InlineDataset], Field(discriminator="kind")
]


class FitRequest(BaseModel):
    dataset: Dataset


class FitResponse(BaseModel):
    beta: list[float]
    converged: bool
    iterations: int
    grad_norm: float
    message: str
    n: int
    p: int
    family: FamilyName


class ProbsRequest(BaseModel):
    """Subsampling probabilities for every row of a dataset.

    ``mode`` picks the reference coefficients: "oracle" uses the
    full-data MLE, "pilot" draws a uniform pilot of ``pilot_size`` rows
    first, which is what the two-stage estimator does.
    """

    dataset: Dataset
    method: MethodName = "mV"
    delta: float = Field(default=1e-6, ge=0.0)
    mode: Literal["oracle", "pilot"] = "oracle"
    pilot_size: int = Field(default=200, gt=0)
    seed: int = Field(default=0, ge=0)


class ProbsResponse(BaseModel):
    method: MethodName
    delta: float
    beta_ref: list[float]
    probs: list[float]


class TwoStepRequest(BaseModel):
    dataset: Dataset
    pilot_size: int = Field(default=200, gt=0)
    refine_size: int = Field(default=1000, ge=0)
    method: Literal["mV", "mVc", "LevA"] = "mV"
    delta: float = Field(default=1e-6, ge=0.0)
    info_mode: Literal["pilot", "full"] = "pilot"
    ci_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)


class TwoStepResponse(BaseModel):
    beta: list[float]
    pilot_beta: list[float]
    vcov: list[list[float]]
    conf_int: list[list[float]]
    ci_level: float
    converged: bool
    pilot_attempts: int


class _ExperimentBase(BaseModel):
    dataset: Dataset
    methods: list[MethodName] = ["mV", "mVc", "UNIF"]
    pilot_size: int = Field(default=200, gt=0)
    n_reps: int = Field(default=500, gt=0)
    seed: int = Field(default=0, ge=0)
    delta: float = Field(default=1e-6, ge=0.0)
    ci_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    include_raw: bool = False


class MseRequest(_ExperimentBase):
    r_grid: list[int] = [300, 500, 700, 1000, 1200, 1400]
    squared_error: bool = False
    include_mspe: bool = False


class CoverageRequest(_ExperimentBase):
    r_grid: list[int] = [500, 1000]
    coverage_coord: int = Field(default=1, ge=0)


class AllocationRequest(_ExperimentBase):
    budget: int = Field(gt=1)
    proportions: list[float] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


class TimingRequest(_ExperimentBase):
    refine_size: int = Field(default=1000, gt=0)
    n_reps: int = Field(default=50, gt=0)
    warmup: int = Field(default=5, ge=0)
    include_full: bool = True


class ReportResponse(BaseModel):
    """The canonical report dictionary plus its rendered table."""

    report: dict
    text: str
