"""Classifiers with an abstain option: nominal vs adversarial error."""

from .classifier import Classifier1D, IntervalSet, Label, RegionSpecD, classify, classify_d, regions
from .densities import (
    Exponential,
    Gaussian,
    Mixture,
    Scenario,
    Tabulated,
    Uniform,
    cdf_at,
    exponential_scenario,
    pdf_at,
    sample,
)
from .design import (
    DesignProblem,
    DesignSolution,
    exponential_kkt_residuals,
    grid_search_design,
    kkt_residuals,
    solve_design,
    sweep_tradeoff,
    symmetric_design,
)
from .exceptions import DomainError, NumericalError, ValidationError
from .risk import (
    ErrorGradient,
    ErrorReport,
    SampledScenario,
    adversarial_error,
    brute_force_errors,
    error_gradients,
    evaluate,
    mc_errors,
    nominal_error,
)

__version__ = "0.1.0"
