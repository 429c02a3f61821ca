"""Objective Bayesian and likelihood inference for 3x2 bilateral tables."""

from .bayes_factor import BfResult, bf_gamma, bf_lambda
from .mle import MleResult, WaldInterval, WaldUnavailable, mle_reduced, mle_saturated, wald_chi2, wald_intervals
from .model import (
    BilateralTable,
    EstimandUndefined,
    Estimands,
    ReducedParams,
    SaturatedUVParams,
    TableError,
    UVParams,
    estimands_from,
    log_likelihood_reduced,
    log_likelihood_saturated,
    validate_table,
)
from .posterior import DrawSet, derive_estimands, sample_reduced, sample_saturated
from .priors import PriorSpec, make_prior, saturated_prior
from .rng import SeededStream
from .simstudy import CriteriaSummary, build_grid, coverage_report, run_cell, run_grid
from .summarize import PosteriorSummary, dic, equal_tailed_interval, hpd_interval, summarize

__version__ = "0.1.0"

__all__ = [
    "BfResult",
    "BilateralTable",
    "CriteriaSummary",
    "DrawSet",
    "EstimandUndefined",
    "Estimands",
    "MleResult",
    "PosteriorSummary",
    "PriorSpec",
    "ReducedParams",
    "SaturatedUVParams",
    "SeededStream",
    "TableError",
    "UVParams",
    "WaldInterval",
    "WaldUnavailable",
    "bf_gamma",
    "bf_lambda",
    "build_grid",
    "coverage_report",
    "derive_estimands",
    "dic",
    "equal_tailed_interval",
    "estimands_from",
    "hpd_interval",
    "log_likelihood_reduced",
    "log_likelihood_saturated",
    "make_prior",
    "mle_reduced",
    "mle_saturated",
    "run_cell",
    "run_grid",
    "sample_reduced",
    "sample_saturated",
    "saturated_prior",
    "summarize",
    "validate_table",
    "wald_chi2",
    "wald_intervals",
]
