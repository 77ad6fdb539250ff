"""Adaptive 1D quadrature and iterated integration over region slices.

The 1D workhorse is QUADPACK's globally adaptive Gauss-Kronrod scheme via
scipy; the embedded rule pair supplies the error estimate that drives
subdivision.  Region integration iterates it over the vertical slices
produced by the geometry module, with the inner tolerance tightened so the
outer error budget is not consumed by inner noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.integrate import quad

from .geometry import RegionSlice

__all__ = [
    "QuadratureSpec",
    "ConvergenceError",
    "DEFAULT_SPEC",
    "integrate_1d",
    "integrate_region",
]

# inner (y) integrals run this much tighter than the requested tolerance so
# iterated integration does not stack errors
INNER_TIGHTENING = 10.0


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")

    def tightened(self, factor: float = INNER_TIGHTENING) -> "QuadratureSpec":
        return QuadratureSpec(
            rel_tol=self.rel_tol / factor,
            abs_tol=self.abs_tol / factor,
            max_subdivisions=self.max_subdivisions,
        )


DEFAULT_SPEC = QuadratureSpec()


class ConvergenceError(RuntimeError):
    """Raised when adaptive subdivision stalls; carries the best estimate."""

    def __init__(self, message: str, estimate: float, error_estimate: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    breakpoints: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Integrate f over [a, b]; returns (value, error estimate).

    Optional breakpoints mark interior abscissae where the integrand is
    non-smooth (jumps, kinks) so the subdivision can align with them.
    """
    if a > b:
        raise ValueError(f"inverted interval [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    points = None
    if breakpoints:
        interior = sorted({float(p) for p in breakpoints if a < p < b})
        points = interior or None
    result = quad(
        f,
        a,
        b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        points=points,
        full_output=1,
    )
    value, err_est = result[0], result[1]
    if len(result) > 3:
        raise ConvergenceError(
            f"quadrature on [{a}, {b}] did not converge: {result[3]}",
            estimate=value,
            error_estimate=err_est,
        )
    return value, err_est


def integrate_region(
    f: Callable[[float, float], float],
    slices: Sequence[RegionSlice],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Iterated integral of f(x, y) over a list of vertical slices.

    Sums the per-slice double integrals; no symmetry factor is applied, so
    callers integrating a half-region must double the result themselves.
    """
    inner_spec = spec.tightened()
    total = 0.0
    for index, sl in enumerate(slices):
        if sl.width <= 0.0:
            continue

        def outer(x: float, sl: RegionSlice = sl) -> float:
            y_lo = sl.y_lo(x)
            y_hi = sl.y_hi(x)
            if y_hi <= y_lo:  # tolerate roundoff at slice corners
                return 0.0
            value, _ = integrate_1d(lambda y: f(x, y), y_lo, y_hi, inner_spec)
            return value

        try:
            value, _ = integrate_1d(outer, sl.x_lo, sl.x_hi, spec)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"slice {index} ([{sl.x_lo}, {sl.x_hi}]): {exc}",
                estimate=exc.estimate,
                error_estimate=exc.error_estimate,
            ) from exc
        total += value
    return total
