"""Importance subsampling estimators for generalized linear models.

The package fits canonical-link models (gaussian, poisson, bernoulli)
on subsamples drawn with data-dependent probabilities, in a two-stage
pilot/refine scheme, and ships the Monte Carlo studies, diagnostics, an
HTTP service and a CLI built on top of the estimators.
"""

__version__ = "0.1.0"

from .datagen import CaseSpec, load_csv, make_case, make_design, make_response
from .diagnostics import (
    check_singular_condition,
    prediction_error_bound,
    recommended_subsample_size,
    spectral_summary,
)
from .errors import (
    CsvFormatError,
    DegenerateWeightsError,
    DomainError,
    GlmsubError,
    PilotError,
    SingularityError,
)
from .experiments import (
    ExperimentConfig,
    Report,
    compute_mspe,
    replicate_rng,
    run_allocation_experiment,
    run_coverage_experiment,
    run_mse_experiment,
    run_timing_benchmark,
)
from .families import Bernoulli, Family, Gaussian, Poisson, get_family
from .sampling import (
    AliasTable,
    SamplingWeights,
    Subsample,
    draw_subsample,
    leverage_weights,
    mv_probs,
    mvc_probs,
    uniform_weights,
)
from .solver import (
    FitResult,
    FullData,
    WeightedSample,
    fit_mle,
    fit_weighted_mle,
    log_likelihood,
    observed_information,
    score,
)
from .twostep import (
    SubsampleEstimate,
    TwoStepConfig,
    asymptotic_variance_opt,
    confidence_interval,
    estimate_variance,
    single_stage_estimate,
    two_step_estimate,
)
