"""Gaussian approximation of empirical distance densities.

Hop counts above three have no closed-form density here; their simulated
histograms are summarized by Gaussians.  The default fit is the method of
moments (deterministic, parameter-free); a least-squares refinement seeded
from the moments is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .analytic import ConditionalGrid, GridKind

__all__ = [
    "GaussianFit",
    "InsufficientDataError",
    "DegenerateDataError",
    "fit_gaussian",
    "gaussian_density",
]

MIN_NONZERO_BINS = 5


class InsufficientDataError(ValueError):
    """Too few nonzero bins to identify two parameters."""


class DegenerateDataError(ValueError):
    """All mass in one spot; no width to fit."""


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma: float
    d: int
    r_squared: float

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (0.0 <= self.r_squared <= 1.0):
            raise ValueError(f"r_squared must lie in [0, 1], got {self.r_squared}")


def _normal_pdf(x: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))


def fit_gaussian(
    grid: ConditionalGrid,
    *,
    refine: bool = False,
    max_midpoint: float | None = None,
) -> GaussianFit:
    """Fit a Gaussian to a density grid.

    mu and sigma are the density-weighted mean and standard deviation of
    the bin midpoints; with refine=True a least-squares pass starting from
    those moments replaces them.  Values are renormalized internally, so a
    uniformly rescaled histogram fits identically.  max_midpoint drops bins
    at larger midpoints, e.g. those squeezed against the region border.
    """
    if grid.kind is not GridKind.DENSITY_p:
        raise ValueError("can only fit density grids")
    width = grid.width
    x = grid.delta_bins
    y = grid.values.astype(float)
    if max_midpoint is not None:
        keep = x <= max_midpoint
        x, y = x[keep], y[keep]
    nonzero = y > 0.0
    if int(nonzero.sum()) < MIN_NONZERO_BINS:
        raise InsufficientDataError(
            f"need at least {MIN_NONZERO_BINS} nonzero bins, got {int(nonzero.sum())}"
        )
    x, y = x[nonzero], y[nonzero]

    total = y.sum()
    mu = float((y * x).sum() / total)
    variance = float((y * (x - mu) ** 2).sum() / total)
    if variance <= 0.0:
        raise DegenerateDataError("zero variance in the histogram")
    sigma = math.sqrt(variance)

    observed = y / (total * width)  # unit-integral version of the histogram
    if refine:
        params, _ = curve_fit(
            lambda t, m, s: _normal_pdf(t, m, abs(s)),
            x,
            observed,
            p0=(mu, sigma),
            maxfev=10_000,
        )
        mu, sigma = float(params[0]), abs(float(params[1]))
        if sigma <= 0.0:
            raise DegenerateDataError("least-squares refinement collapsed sigma")

    predicted = _normal_pdf(x, mu, sigma)
    ss_res = float(((observed - predicted) ** 2).sum())
    ss_tot = float(((observed - observed.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r_squared = min(max(r_squared, 0.0), 1.0)
    return GaussianFit(mu=mu, sigma=sigma, d=grid.d, r_squared=r_squared)


def gaussian_density(fit: GaussianFit, delta: float) -> float:
    """Evaluate the fitted Gaussian density at one distance."""
    z = (delta - fit.mu) / fit.sigma
    return math.exp(-0.5 * z * z) / (fit.sigma * math.sqrt(2.0 * math.pi))
