"""Mean estimation from one-bit interval queries."""

from .agent import Agent, BudgetExhausted
from .core import (GrayQuery, IntervalQuery, Moment, ParamError, ProblemParams, SubGaussian,
                   Transcript, Variance, derive_seed, substream, validate_params)
from .distributions import (Gaussian, HardInstance, PointMass, ScaledStudentT, TwoPoint, Uniform,
                            exact_region_quantities, family_check, make_hard_instance, spec_from_dict)
from .estimator import (EstimateReport, estimate_anytime, estimate_mean_main, estimate_multivariate,
                        estimate_two_stage, estimate_unknown_variance, nonadaptive_baseline)
from .localize import CenterInterval, gray_localize, median_localize_adaptive
from .refine import estimate_region, sq_round
from .schedule import build_regions, compute_i_max, make_schedule, region_budget, total_refinement_cost

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "BudgetExhausted",
    "build_regions",
    "CenterInterval",
    "compute_i_max",
    "derive_seed",
    "estimate_anytime",
    "estimate_mean_main",
    "estimate_multivariate",
    "estimate_region",
    "estimate_two_stage",
    "estimate_unknown_variance",
    "EstimateReport",
    "exact_region_quantities",
    "family_check",
    "Gaussian",
    "gray_localize",
    "GrayQuery",
    "HardInstance",
    "IntervalQuery",
    "make_hard_instance",
    "make_schedule",
    "median_localize_adaptive",
    "Moment",
    "nonadaptive_baseline",
    "ParamError",
    "PointMass",
    "ProblemParams",
    "region_budget",
    "ScaledStudentT",
    "spec_from_dict",
    "sq_round",
    "SubGaussian",
    "substream",
    "total_refinement_cost",
    "Transcript",
    "TwoPoint",
    "Uniform",
    "validate_params",
    "Variance",
]
