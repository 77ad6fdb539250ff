"""Conditional distributions of hop count vs Euclidean distance in 2D
random geometric graphs: closed forms, region quadrature, Monte Carlo
estimation, calibration, and Gaussian summaries."""

from .analytic import (
    ConditionalGrid,
    DegenerateDistributionError,
    GridKind,
    NetworkConfig,
    density_from_prob,
    pdf_d1,
    prob_d1,
    prob_d2,
    prob_d3,
    prob_from_density,
    prob_prime_d3,
)
from .fitting import GaussianFit, fit_gaussian, gaussian_density
from .geometry import (
    Landmarks,
    Point2D,
    Regime,
    RegionSlice,
    landmarks,
    lens_area,
    region_slices,
    sigma_k,
    tri_circle_area,
)
from .mcsim import (
    AccumulatorMatrix,
    CalibrationResult,
    TrialOutcome,
    accumulate,
    calibrate_n_prime,
    estimate_distributions,
    estimate_Pprime3,
    estimate_Q,
    run_trial,
    sample_unit_disk,
)
from .quadrature import ConvergenceError, QuadratureSpec, integrate_1d, integrate_region

__version__ = "0.1.0"

__all__ = [
    "AccumulatorMatrix",
    "CalibrationResult",
    "ConditionalGrid",
    "ConvergenceError",
    "DegenerateDistributionError",
    "GaussianFit",
    "GridKind",
    "Landmarks",
    "NetworkConfig",
    "Point2D",
    "QuadratureSpec",
    "Regime",
    "RegionSlice",
    "TrialOutcome",
    "accumulate",
    "calibrate_n_prime",
    "density_from_prob",
    "estimate_distributions",
    "estimate_Pprime3",
    "estimate_Q",
    "fit_gaussian",
    "gaussian_density",
    "integrate_1d",
    "integrate_region",
    "landmarks",
    "lens_area",
    "pdf_d1",
    "prob_d1",
    "prob_d2",
    "prob_d3",
    "prob_from_density",
    "prob_prime_d3",
    "region_slices",
    "run_trial",
    "sample_unit_disk",
    "sigma_k",
    "tri_circle_area",
]
