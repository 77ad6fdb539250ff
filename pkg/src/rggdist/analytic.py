"""Conditional probability formulas linking hop count and Euclidean distance.

For two nodes a fixed Euclidean distance apart in a unit-area disk
deployment, these functions give the probability that the hop distance is
1, 2 or 3, plus the conversions between that conditional probability and
the Euclidean-distance density conditioned on hop count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .geometry import SQRT3, lens_area, region_slices, sigma_k
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_1d, integrate_region

__all__ = [
    "GIANT_COMPONENT_Z",
    "UNIT_AREA_RADIUS",
    "NetworkConfig",
    "GridKind",
    "ConditionalGrid",
    "DegenerateDistributionError",
    "prob_d1",
    "pdf_d1",
    "prob_d2",
    "prob_prime_d3",
    "prob_d3",
    "density_from_prob",
    "prob_from_density",
]

# connectivity at which the giant component emerges in 2D random geometric
# graphs; configurations below it fragment and are flagged, not rejected
GIANT_COMPONENT_Z = 4.52

# radius of the unit-area deployment disk
UNIT_AREA_RADIUS = math.sqrt(1.0 / math.pi)

_CONSISTENCY_TOL = 1e-9


class DegenerateDistributionError(ValueError):
    """The probability function integrates to zero; no density exists."""


@dataclass(frozen=True)
class NetworkConfig:
    """Experiment parameters: node count, connectivity, radii, RNG seed.

    Exactly one of connectivity z and communication radius R is free;
    the other follows from z = pi * R^2 * n.  Use from_z / from_radius
    instead of filling both by hand.
    """

    n: int
    z: float
    R: float
    region_radius: float = UNIT_AREA_RADIUS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"need at least 3 nodes, got {self.n}")
        if self.R <= 0.0 or self.region_radius <= 0.0:
            raise ValueError("radii must be positive")
        expected = math.pi * self.R * self.R * self.n
        if abs(expected - self.z) > _CONSISTENCY_TOL * max(1.0, abs(self.z)):
            raise ValueError(
                f"inconsistent parameters: pi*R^2*n = {expected} but z = {self.z}"
            )
        if self.z <= GIANT_COMPONENT_Z:
            warnings.warn(
                f"connectivity z = {self.z:.3f} is at or below the giant-component "
                f"threshold {GIANT_COMPONENT_Z}; graphs will often fragment",
                stacklevel=2,
            )

    @classmethod
    def from_z(cls, n: int, z: float, **kwargs) -> "NetworkConfig":
        R = math.sqrt(z / (math.pi * n))
        return cls(n=n, z=z, R=R, **kwargs)

    @classmethod
    def from_radius(cls, n: int, R: float, **kwargs) -> "NetworkConfig":
        return cls(n=n, z=math.pi * R * R * n, R=R, **kwargs)


class GridKind(Enum):
    PROB_P = "P"       # probability of a hop count, conditioned on distance
    DENSITY_p = "p"    # density of distance, conditioned on a hop count


@dataclass
class ConditionalGrid:
    """One conditional distribution sampled on the distance-bin grid.

    delta_bins holds bin midpoints.  counts carry the sample support:
    column totals for PROB_P grids (the estimator's denominator) and
    per-bin row counts for DENSITY_p grids.  Analytic grids use None.
    """

    d: int
    delta_bins: np.ndarray
    values: np.ndarray
    kind: GridKind
    counts: np.ndarray | None = None
    bin_width: float | None = None

    def __post_init__(self) -> None:
        self.delta_bins = np.asarray(self.delta_bins, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.delta_bins.shape != self.values.shape:
            raise ValueError("delta_bins and values must have matching shape")
        if self.counts is not None:
            self.counts = np.asarray(self.counts)
            if self.counts.shape != self.values.shape:
                raise ValueError("counts must match the grid shape")
        if self.d < 1:
            raise ValueError(f"hop distance must be positive, got {self.d}")

    @property
    def width(self) -> float:
        if self.bin_width is not None:
            return self.bin_width
        if len(self.delta_bins) < 2:
            raise ValueError("cannot infer bin width from a single bin")
        return float(np.median(np.diff(self.delta_bins)))

    def validate(self, R: float) -> None:
        """Raise if the grid violates its structural invariants."""
        if self.kind is GridKind.PROB_P:
            if np.any(self.values < -1e-12) or np.any(self.values > 1.0 + 1e-12):
                raise ValueError("probabilities must lie in [0, 1]")
        else:
            if np.any(self.values < -1e-12):
                raise ValueError("densities must be nonnegative")
        # a hop count of d cannot reach beyond d*R, so any bin lying wholly
        # beyond that limit must be empty
        beyond = (self.delta_bins - 0.5 * self.width) >= self.d * R
        if np.any(self.values[beyond] != 0.0):
            raise ValueError(f"nonzero values beyond delta = {self.d}*R")


def prob_d1(delta: float, cfg: NetworkConfig) -> float:
    """Probability of being one hop apart: the nodes simply hear each other."""
    return 1.0 if delta <= cfg.R else 0.0


def pdf_d1(delta: float, cfg: NetworkConfig) -> float:
    """Distance density among one-hop pairs: linear ramp 2*delta/R^2 on [0, R]."""
    if 0.0 <= delta <= cfg.R:
        return 2.0 * delta / (cfg.R * cfg.R)
    return 0.0


def prob_d2(delta: float, cfg: NetworkConfig) -> float:
    """Probability of being exactly two hops apart.

    Beyond direct reach, some of the other n-2 nodes must fall in the lens
    common to both communication disks; each lands there independently
    with probability equal to the lens area.
    """
    if delta <= cfg.R:
        return 0.0
    rho = lens_area(delta, cfg.R)
    if rho <= 0.0:
        return 0.0
    return -math.expm1((cfg.n - 2) * math.log1p(-rho))


@lru_cache(maxsize=16384)
def _pprime3_cached(
    delta: float,
    n: int,
    R: float,
    rel_tol: float,
    abs_tol: float,
    max_subdivisions: int,
) -> float:
    spec = QuadratureSpec(rel_tol, abs_tol, max_subdivisions)
    slices = region_slices(delta, R)
    exponent = n - 3

    def relay_success(x: float, y: float) -> float:
        s = sigma_k(delta, (x, y), R)
        if s <= 0.0:
            return 0.0
        if s >= 1.0:
            return 1.0
        return -math.expm1(exponent * math.log1p(-s))

    half = integrate_region(relay_success, slices, spec)
    return min(max(2.0 * half, 0.0), 1.0)


def prob_prime_d3(
    delta: float, cfg: NetworkConfig, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Probability that one random node opens a three-hop shortest path.

    Integrates, over the feasible first-relay region, the chance that at
    least one of the remaining n-3 nodes completes the relay chain.  Values
    are memoized per (delta, n, R, tolerance) since grid evaluations repeat
    the same expensive double integrals.
    """
    if not (cfg.R < delta <= 3.0 * cfg.R):
        raise ValueError(
            f"delta = {delta} outside the three-hop window ({cfg.R}, {3.0 * cfg.R}]"
        )
    return _pprime3_cached(
        float(delta), cfg.n, float(cfg.R),
        spec.rel_tol, spec.abs_tol, spec.max_subdivisions,
    )


def prob_d3(
    delta: float,
    cfg: NetworkConfig,
    n_prime: int,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Probability of being exactly three hops apart.

    Combines the chance that no node bridges the pair in two hops with the
    chance that at least one of n_prime effectively independent nodes opens
    a three-hop path; n_prime comes from the empirical calibration.
    """
    if not (1 <= n_prime <= cfg.n - 2):
        raise ValueError(f"n_prime must lie in [1, {cfg.n - 2}], got {n_prime}")
    if delta <= cfg.R or delta > 3.0 * cfg.R:
        return 0.0
    pp = prob_prime_d3(delta, cfg, spec)
    if pp >= 1.0:
        bridged = 1.0
    elif pp <= 0.0:
        bridged = 0.0
    else:
        bridged = -math.expm1(n_prime * math.log1p(-pp))
    rho = lens_area(delta, cfg.R)
    no_two_hop = math.exp((cfg.n - 2) * math.log1p(-rho)) if rho > 0.0 else 1.0
    return bridged * no_two_hop


def density_from_prob(
    P: Callable[[float], float],
    d: int,
    cfg: NetworkConfig,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> Callable[[float], float]:
    """Turn a hop-count probability curve into the matching distance density.

    Distances between uniform points occur with density proportional to
    delta, so the density is P(delta)*delta normalized over the reachable
    range [0, d*R].  P must already vanish beyond d*R.
    """
    if d < 1:
        raise ValueError(f"hop distance must be positive, got {d}")
    upper = d * cfg.R
    kinks = [p for p in (cfg.R, SQRT3 * cfg.R, 2.0 * cfg.R) if 0.0 < p < upper]
    denominator, _ = integrate_1d(
        lambda r: P(r) * r, 0.0, upper, spec, breakpoints=kinks
    )
    if denominator <= 0.0:
        raise DegenerateDistributionError(
            f"probability curve for d = {d} integrates to zero"
        )

    def density(delta: float) -> float:
        if delta < 0.0 or delta > upper:
            return 0.0
        return P(delta) * delta / denominator

    return density


def prob_from_density(
    densities: Iterable[tuple[int, Callable[[float], float]]],
    priors: Mapping[int, float],
    delta: float,
) -> dict[int, float] | None:
    """Invert densities back into hop-count probabilities at one distance.

    Weights each density by the marginal hop-count probability and
    renormalizes; only the priors' relative sizes matter.  Returns None
    where every supplied density vanishes (the conversion is undefined
    there, which is not an error).
    """
    weighted: dict[int, float] = {}
    for d, density in densities:
        try:
            prior = priors[d]
        except KeyError:
            raise ValueError(f"no prior supplied for d = {d}") from None
        if prior < 0.0:
            raise ValueError(f"negative prior for d = {d}")
        weighted[d] = density(delta) * prior
    if not weighted:
        raise ValueError("no densities supplied")
    total = sum(weighted.values())
    if total <= 0.0:
        return None
    return {d: w / total for d, w in weighted.items()}
