"""Exact planar geometry of equal-radius circle intersections.

Everything here works in the same length units as the radius R and places
the reference node pair on the x-axis: node a at the origin, node b at
(delta, 0).  Areas come out in squared length units; they double as
probabilities only when the deployment region has unit area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Sequence

__all__ = [
    "Point2D",
    "Regime",
    "Landmarks",
    "RegionSlice",
    "lens_area",
    "tri_circle_area",
    "sigma_k",
    "landmarks",
    "region_slices",
]

# absolute distance tolerance for degeneracy decisions (tangency, coincident
# centers, collinear configurations)
TOL = 1e-12

SQRT3 = math.sqrt(3.0)


class Point2D(NamedTuple):
    x: float
    y: float


class Regime(Enum):
    """Separation regime of the two reference circles, upper-inclusive."""

    NARROW = "narrow"  # R < delta <= R*sqrt(3)
    MID = "mid"        # R*sqrt(3) < delta <= 2R
    FAR = "far"        # 2R < delta <= 3R


@dataclass(frozen=True)
class Landmarks:
    """Abscissae (and one ordinate) of the construction points that delimit
    the first-relay region for a given separation delta.

    x_C, x_D, y_D exist only while the two reference circles overlap
    (NARROW and MID regimes); they are None in FAR.
    """

    x_A: float
    x_B: float
    regime: Regime
    x_C: float | None = None
    x_D: float | None = None
    y_D: float | None = None


@dataclass(frozen=True)
class RegionSlice:
    """Vertical slice of the upper half of the first-relay region.

    For x in [x_lo, x_hi] the region spans y in [y_lo(x), y_hi(x)].
    """

    x_lo: float
    x_hi: float
    y_lo: Callable[[float], float]
    y_hi: Callable[[float], float]

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo


def lens_area(delta: float, R: float) -> float:
    """Intersection area of two radius-R circles whose centers are delta apart.

    Zero once the centers are 2R or more apart; pi*R^2 for coincident centers.
    """
    if R <= 0.0:
        raise ValueError(f"radius must be positive, got {R}")
    if delta < 0.0:
        raise ValueError(f"center distance must be nonnegative, got {delta}")
    if delta >= 2.0 * R:
        return 0.0
    # clamp guards the acos/sqrt arguments against roundoff near delta = 2R
    half_ratio = min(delta / (2.0 * R), 1.0)
    root = math.sqrt(max(R * R - 0.25 * delta * delta, 0.0))
    return 2.0 * R * R * math.acos(half_ratio) - delta * root


def _pair_intersections(
    p: tuple[float, float], q: tuple[float, float], R: float
) -> tuple[tuple[float, float], ...]:
    """Intersection points of two radius-R circles centered at p and q."""
    d = math.dist(p, q)
    if d <= TOL or d >= 2.0 * R:
        return ()
    h_sq = R * R - 0.25 * d * d
    h = math.sqrt(h_sq) if h_sq > 0.0 else 0.0
    mx = 0.5 * (p[0] + q[0])
    my = 0.5 * (p[1] + q[1])
    ux = (q[0] - p[0]) / d
    uy = (q[1] - p[1]) / d
    return ((mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux))


def _boundary_segment(
    v: tuple[float, float],
    w: tuple[float, float],
    centers: Sequence[tuple[float, float]],
    R: float,
) -> float:
    """Circular-segment area added by the boundary arc running CCW from v to w.

    The arc must belong to a circle through both vertices and stay inside
    every disk; when several circles qualify the tightest (smallest-span)
    arc bounds the intersection.  Squared distances keep the hot path free
    of redundant square roots.
    """
    r_sq = R * R
    on_circle = 2.0e-9 * r_sq + TOL  # |d^2 - R^2| bound for "lies on circle"
    inside_sq = r_sq * (1.0 + 4.0e-9) + TOL
    vx, vy = v
    wx, wy = w
    best_span = None
    for cx, cy in centers:
        dvx = vx - cx
        dvy = vy - cy
        if abs(dvx * dvx + dvy * dvy - r_sq) > on_circle:
            continue
        dwx = wx - cx
        dwy = wy - cy
        if abs(dwx * dwx + dwy * dwy - r_sq) > on_circle:
            continue
        a1 = math.atan2(dvy, dvx)
        span = (math.atan2(dwy, dwx) - a1) % (2.0 * math.pi)
        if span <= 0.0:
            continue
        if best_span is None or span < best_span:
            mid_angle = a1 + 0.5 * span
            mx = cx + R * math.cos(mid_angle)
            my = cy + R * math.sin(mid_angle)
            ok = True
            for ox, oy in centers:
                dx = mx - ox
                dy = my - oy
                if dx * dx + dy * dy > inside_sq:
                    ok = False
                    break
            if ok:
                best_span = span
    if best_span is None:
        # vanishing arc at a tangency; the chord already accounts for it
        return 0.0
    return 0.5 * R * R * (best_span - math.sin(best_span))


def tri_circle_area(
    c1: Sequence[float], c2: Sequence[float], c3: Sequence[float], R: float
) -> float:
    """Area of the common intersection of three radius-R disks.

    Computed by circular-triangle decomposition: the pairwise intersection
    points lying inside the remaining disk are the vertices of the (convex)
    intersection; its area is the vertex polygon plus one circular segment
    per boundary arc.  Degeneracies (coincident centers, tangencies, empty
    intersection) resolve through containment pre-tests at tolerance TOL.
    """
    if R <= 0.0:
        raise ValueError(f"radius must be positive, got {R}")
    pts = [(float(p[0]), float(p[1])) for p in (c1, c2, c3)]
    centers: list[tuple[float, float]] = []
    for p in pts:
        if all(math.dist(p, q) > TOL for q in centers):
            centers.append(p)
    if len(centers) == 1:
        return math.pi * R * R
    if len(centers) == 2:
        return lens_area(math.dist(centers[0], centers[1]), R)

    limit = 2.0 * R - TOL
    limit_sq = limit * limit
    for (ix, iy), (jx, jy) in ((pts[0], pts[1]), (pts[0], pts[2]), (pts[1], pts[2])):
        dx = ix - jx
        dy = iy - jy
        # tangent or separated pair leaves at most a measure-zero overlap
        if dx * dx + dy * dy >= limit_sq:
            return 0.0

    inside = R + TOL
    inside_sq = inside * inside
    verts: list[tuple[float, float]] = []
    for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        tx, ty = centers[k]
        for v in _pair_intersections(centers[i], centers[j], R):
            dx = v[0] - tx
            dy = v[1] - ty
            if dx * dx + dy * dy <= inside_sq:
                verts.append(v)
    uniq: list[tuple[float, float]] = []
    for v in verts:
        if all(math.dist(v, u) > TOL for u in uniq):
            uniq.append(v)
    if len(uniq) < 2:
        # empty interior, or a single tangency point
        return 0.0

    gx = sum(v[0] for v in uniq) / len(uniq)
    gy = sum(v[1] for v in uniq) / len(uniq)
    uniq.sort(key=lambda v: math.atan2(v[1] - gy, v[0] - gx))

    area = 0.0
    m = len(uniq)
    for idx in range(m):
        x1, y1 = uniq[idx]
        x2, y2 = uniq[(idx + 1) % m]
        area += x1 * y2 - x2 * y1
    area *= 0.5  # CCW vertex order keeps this nonnegative

    for idx in range(m):
        area += _boundary_segment(uniq[idx], uniq[(idx + 1) % m], centers, R)
    return max(area, 0.0)


def _check_separation(delta: float, R: float) -> None:
    if R <= 0.0:
        raise ValueError(f"radius must be positive, got {R}")
    if not (R < delta <= 3.0 * R):
        raise ValueError(
            f"separation delta={delta} outside the two-to-three-hop window "
            f"({R}, {3.0 * R}]"
        )


def sigma_k(delta: float, k: Sequence[float], R: float) -> float:
    """Area where the second relay can sit, given the first relay at k.

    With a at the origin and b at (delta, 0): the second relay must be
    within R of both b and k but farther than R from a.  While the a- and
    b-disks overlap (delta <= 2R) that excluded part is the triple
    intersection; beyond 2R the a-disk cannot reach the b/k lens at all.
    """
    _check_separation(delta, R)
    xk = float(k[0])
    yk = float(k[1])
    dist_bk = math.hypot(xk - delta, yk)
    if dist_bk >= 2.0 * R:
        return 0.0
    area = lens_area(dist_bk, R)
    if delta <= 2.0 * R:
        area -= tri_circle_area((0.0, 0.0), (delta, 0.0), (xk, yk), R)
    return max(area, 0.0)


def landmarks(delta: float, R: float) -> Landmarks:
    """Construction points delimiting the first-relay region at separation delta."""
    _check_separation(delta, R)
    if delta <= R * SQRT3:
        regime = Regime.NARROW
    elif delta <= 2.0 * R:
        regime = Regime.MID
    else:
        regime = Regime.FAR

    if regime is Regime.FAR:
        return Landmarks(
            x_A=delta - 2.0 * R,
            x_B=(delta * delta - 3.0 * R * R) / (2.0 * delta),
            regime=regime,
        )

    y_d = 0.5 * math.sqrt(max(4.0 * R * R - delta * delta, 0.0))
    if regime is Regime.NARROW:
        x_b = 0.25 * (delta - math.sqrt(max(3.0 * (4.0 * R * R - delta * delta), 0.0)))
    else:
        x_b = (delta * delta - 3.0 * R * R) / (2.0 * delta)
    return Landmarks(
        x_A=0.5 * delta - R,
        x_B=x_b,
        regime=regime,
        x_C=delta - R,
        x_D=0.5 * delta,
        y_D=y_d,
    )


def _circle_upper(cx: float, cy: float, r: float) -> Callable[[float], float]:
    r_sq = r * r

    def curve(x: float) -> float:
        return cy + math.sqrt(max(r_sq - (x - cx) ** 2, 0.0))

    return curve


def _circle_lower(cx: float, cy: float, r: float) -> Callable[[float], float]:
    r_sq = r * r

    def curve(x: float) -> float:
        return cy - math.sqrt(max(r_sq - (x - cx) ** 2, 0.0))

    return curve


def _flat(x: float) -> float:
    return 0.0


def region_slices(delta: float, R: float) -> list[RegionSlice]:
    """Vertical slices covering the upper half of the first-relay region.

    Four slices in the NARROW and MID regimes, two in FAR.  Consecutive
    slices share their junction abscissa, and the boundary curves agree at
    the junctions; zero-width slices appear exactly at the regime
    thresholds.
    """
    lm = landmarks(delta, R)
    upper_a = _circle_upper(0.0, 0.0, R)
    upper_b_2r = _circle_upper(delta, 0.0, 2.0 * R)

    if lm.regime is Regime.FAR:
        return [
            RegionSlice(lm.x_A, lm.x_B, _flat, upper_b_2r),
            RegionSlice(lm.x_B, R, _flat, upper_a),
        ]

    assert lm.x_C is not None and lm.x_D is not None and lm.y_D is not None
    upper_d = _circle_upper(lm.x_D, lm.y_D, R)
    lower_d = _circle_lower(lm.x_D, lm.y_D, R)
    upper_b = _circle_upper(delta, 0.0, R)

    if lm.regime is Regime.NARROW:
        return [
            RegionSlice(lm.x_A, lm.x_B, lower_d, upper_d),
            RegionSlice(lm.x_B, 0.0, lower_d, upper_a),
            RegionSlice(0.0, lm.x_C, _flat, upper_a),
            RegionSlice(lm.x_C, lm.x_D, upper_b, upper_a),
        ]
    return [
        RegionSlice(lm.x_A, 0.0, lower_d, upper_d),
        RegionSlice(0.0, lm.x_B, _flat, upper_b_2r),
        RegionSlice(lm.x_B, lm.x_C, _flat, upper_a),
        RegionSlice(lm.x_C, lm.x_D, upper_b, upper_a),
    ]
