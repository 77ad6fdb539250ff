"""Monte Carlo engine: trial generation, accumulation, and calibration.

Three procedures live here: the main estimator that bins (hop count,
Euclidean distance) pairs for every node against a hub node at the region
center, the direct estimator of the three-hop relay probability, and the
no-relay probability used to calibrate the effective independent node
count.  Every stream is keyed by (seed, stream id) through a counter-based
generator, so results are reproducible regardless of how trials are split
across workers.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat

import numpy as np
from scipy.spatial import cKDTree

from .analytic import ConditionalGrid, GridKind, NetworkConfig

__all__ = [
    "UNREACHABLE",
    "DEFAULT_BIN_WIDTH",
    "TrialOutcome",
    "AccumulatorMatrix",
    "CalibrationResult",
    "trial_rng",
    "sample_unit_disk",
    "run_trial",
    "hop_distances_reference",
    "accumulate",
    "grids_from_matrix",
    "estimate_distributions",
    "estimate_Pprime3",
    "estimate_Q",
    "calibrate_n_prime",
    "calibration_interval",
]

UNREACHABLE = -1
DEFAULT_BIN_WIDTH = 0.001

_MASK64 = (1 << 64) - 1
# fixed tags keeping auxiliary simulations on streams disjoint from the
# per-trial streams of the main estimator
_PPRIME_TAG = 0x9E3779B97F4A7C15
_Q_TAG = 0xC2B2AE3D27D4EB4F


def trial_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _delta_stream(tag: int, delta: float) -> int:
    bits = struct.unpack("<Q", struct.pack("<d", float(delta)))[0]
    return (tag ^ bits) & _MASK64


def sample_unit_disk(rng: np.random.Generator, radius: float, size: int | None = None):
    """Uniform points in the disk of the given radius centered at the origin.

    Returns a (size, 2) array, or a single (x, y) pair when size is None.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    m = 1 if size is None else int(size)
    r = radius * np.sqrt(rng.random(m))
    theta = rng.random(m) * (2.0 * math.pi)
    pts = np.empty((m, 2))
    pts[:, 0] = r * np.cos(theta)
    pts[:, 1] = r * np.sin(theta)
    if size is None:
        return float(pts[0, 0]), float(pts[0, 1])
    return pts


@dataclass
class TrialOutcome:
    """Per-node (hop count, Euclidean distance) pairs for one trial.

    graph_dist is UNREACHABLE for nodes in a different component than the
    hub; euclid_dist is always defined.
    """

    graph_dist: np.ndarray
    euclid_dist: np.ndarray


def _hop_distances(positions: np.ndarray, R: float) -> np.ndarray:
    """Hop distances from node 0 in the unit-disk graph on the positions.

    Edges join nodes at Euclidean distance <= R; levels are explored
    breadth-first, which on an unweighted graph equals any shortest-path
    algorithm.  Neighbor pairs come from a spatial index, keeping edge
    construction near-linear in the node count.
    """
    n = len(positions)
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[0] = 0
    pairs = cKDTree(positions).query_pairs(R, output_type="ndarray")
    if pairs.size == 0:
        return dist
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.argsort(src, kind="stable")
    src_sorted = src[order]
    dst_sorted = dst[order]
    indptr = np.searchsorted(src_sorted, np.arange(n + 1))

    frontier = np.array([0], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        neighbors = np.concatenate(
            [dst_sorted[indptr[v]: indptr[v + 1]] for v in frontier]
        )
        neighbors = neighbors[dist[neighbors] == UNREACHABLE]
        if neighbors.size == 0:
            break
        neighbors = np.unique(neighbors)
        dist[neighbors] = level
        frontier = neighbors
    return dist


def hop_distances_reference(positions: np.ndarray, R: float) -> np.ndarray:
    """All-pairs reference for _hop_distances; quadratic, for tests only."""
    n = len(positions)
    diff = positions[:, None, :] - positions[None, :, :]
    adjacent = (diff ** 2).sum(axis=-1) <= R * R
    np.fill_diagonal(adjacent, False)
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[0] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[0] = True
    level = 0
    while frontier.any():
        level += 1
        reached = adjacent[frontier].any(axis=0) & (dist == UNREACHABLE)
        if not reached.any():
            break
        dist[reached] = level
        frontier = reached
    return dist


def run_trial(cfg: NetworkConfig, trial_index: int) -> TrialOutcome:
    """One placement: the hub at the center, n-1 nodes uniform in the region.

    Deterministic given (cfg.seed, trial_index).
    """
    rng = trial_rng(cfg.seed, trial_index)
    others = sample_unit_disk(rng, cfg.region_radius, cfg.n - 1)
    positions = np.empty((cfg.n, 2))
    positions[0] = 0.0
    positions[1:] = others
    hops = _hop_distances(positions, cfg.R)
    return TrialOutcome(
        graph_dist=hops[1:],
        euclid_dist=np.hypot(others[:, 0], others[:, 1]),
    )


def n_bins(region_radius: float, bin_width: float = DEFAULT_BIN_WIDTH) -> int:
    """Number of distance bins covering [0, region_radius]; the last bin may
    be truncated by the region boundary."""
    return int(math.ceil(region_radius / bin_width - 1e-9))


def bin_midpoints(region_radius: float, bin_width: float = DEFAULT_BIN_WIDTH) -> np.ndarray:
    return (np.arange(n_bins(region_radius, bin_width)) + 0.5) * bin_width


@dataclass(eq=False)
class AccumulatorMatrix:
    """Counting matrix over (hop count, distance bin) pairs.

    Row d-1 counts nodes at hop distance d; columns are bins of bin_width
    covering [0, region_radius].  Unreachable nodes land in no row and are
    tallied separately.  Merging is plain addition, so trials can be split
    across workers in any way without changing the total.
    """

    counts: np.ndarray
    bin_width: float
    region_radius: float
    n: int
    trials: int = 0
    unreachable: int = 0

    @classmethod
    def empty(cls, cfg: NetworkConfig, bin_width: float = DEFAULT_BIN_WIDTH):
        cols = n_bins(cfg.region_radius, bin_width)
        return cls(
            counts=np.zeros((cfg.n - 1, cols), dtype=np.uint64),
            bin_width=bin_width,
            region_radius=cfg.region_radius,
            n=cfg.n,
        )

    @property
    def n_cols(self) -> int:
        return self.counts.shape[1]

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cols) + 0.5) * self.bin_width

    def record(self, outcome: TrialOutcome) -> None:
        reachable = outcome.graph_dist != UNREACHABLE
        self.unreachable += int(np.count_nonzero(~reachable))
        hops = outcome.graph_dist[reachable]
        # bin edges resolve downward (floor); only the region boundary clamps
        cols = (outcome.euclid_dist[reachable] / self.bin_width).astype(np.int64)
        np.clip(cols, 0, self.n_cols - 1, out=cols)
        np.add.at(self.counts, (hops - 1, cols), 1)
        self.trials += 1

    def merge(self, other: "AccumulatorMatrix") -> "AccumulatorMatrix":
        if (
            other.counts.shape != self.counts.shape
            or other.bin_width != self.bin_width
            or other.region_radius != self.region_radius
            or other.n != self.n
        ):
            raise ValueError("cannot merge accumulators with different layouts")
        self.counts += other.counts
        self.trials += other.trials
        self.unreachable += other.unreachable
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AccumulatorMatrix):
            return NotImplemented
        return (
            self.bin_width == other.bin_width
            and self.region_radius == other.region_radius
            and self.n == other.n
            and self.trials == other.trials
            and self.unreachable == other.unreachable
            and np.array_equal(self.counts, other.counts)
        )


def _accumulate_range(
    cfg: NetworkConfig, start: int, stop: int, bin_width: float
) -> AccumulatorMatrix:
    acc = AccumulatorMatrix.empty(cfg, bin_width)
    for index in range(start, stop):
        acc.record(run_trial(cfg, index))
    return acc


def accumulate(
    cfg: NetworkConfig,
    trials: int,
    *,
    workers: int = 1,
    bin_width: float = DEFAULT_BIN_WIDTH,
) -> AccumulatorMatrix:
    """Run trials and sum their accumulator matrices.

    The result is identical for any worker count: each trial's stream
    depends only on (seed, trial index) and merging is commutative.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if workers <= 1:
        return _accumulate_range(cfg, 0, trials, bin_width)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(
                _accumulate_range,
                repeat(cfg),
                bounds[:-1],
                bounds[1:],
                repeat(bin_width),
            )
        )
    total = parts[0]
    for part in parts[1:]:
        total.merge(part)
    return total


def grids_from_matrix(
    matrix: AccumulatorMatrix, d_max: int | None = None
) -> tuple[dict[int, ConditionalGrid], dict[int, ConditionalGrid]]:
    """Normalize an accumulator into per-d probability and density grids.

    Probabilities normalize each column over hop counts (unreachable nodes
    count in no row); densities normalize each row to unit integral.
    """
    counts = matrix.counts
    col_totals = counts.sum(axis=0)
    row_totals = counts.sum(axis=1)
    mids = matrix.midpoints
    safe_cols = np.maximum(col_totals, 1)

    prob_grids: dict[int, ConditionalGrid] = {}
    density_grids: dict[int, ConditionalGrid] = {}
    for d in (np.flatnonzero(row_totals) + 1):
        d = int(d)
        if d_max is not None and d > d_max:
            break
        row = counts[d - 1]
        prob_grids[d] = ConditionalGrid(
            d=d,
            delta_bins=mids,
            values=np.where(col_totals > 0, row / safe_cols, 0.0),
            kind=GridKind.PROB_P,
            counts=col_totals.copy(),
            bin_width=matrix.bin_width,
        )
        density_grids[d] = ConditionalGrid(
            d=d,
            delta_bins=mids,
            values=row / (matrix.bin_width * row_totals[d - 1]),
            kind=GridKind.DENSITY_p,
            counts=row.copy(),
            bin_width=matrix.bin_width,
        )
    return prob_grids, density_grids


def estimate_distributions(
    cfg: NetworkConfig,
    trials: int,
    *,
    workers: int = 1,
    bin_width: float = DEFAULT_BIN_WIDTH,
    d_max: int | None = None,
) -> tuple[dict[int, ConditionalGrid], dict[int, ConditionalGrid]]:
    """Estimate both conditional families from scratch; see accumulate()."""
    matrix = accumulate(cfg, trials, workers=workers, bin_width=bin_width)
    return grids_from_matrix(matrix, d_max=d_max)


def _binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def estimate_Pprime3(
    delta: float,
    cfg: NetworkConfig,
    trials: int,
    *,
    batch: int = 100_000,
) -> tuple[float, float]:
    """Direct estimate of the three-hop relay-opening probability.

    Fixes the far node at (delta, 0).  Each trial draws one candidate first
    relay plus the n-3 remaining nodes and succeeds when the candidate is a
    feasible first relay and some other node completes the chain: within R
    of both the relay and the far node while out of the hub's reach.
    Returns (fraction, binomial standard error).
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if delta <= cfg.R:
        raise ValueError(f"delta = {delta} must exceed the direct reach R = {cfg.R}")
    rng = trial_rng(cfg.seed, _delta_stream(_PPRIME_TAG, delta))
    R_sq = cfg.R * cfg.R
    n_candidates = cfg.n - 3
    successes = 0
    remaining = trials
    while remaining > 0:
        m = min(batch, remaining)
        remaining -= m
        k_pts = sample_unit_disk(rng, cfg.region_radius, m)
        da_sq = k_pts[:, 0] ** 2 + k_pts[:, 1] ** 2
        db_sq = (k_pts[:, 0] - delta) ** 2 + k_pts[:, 1] ** 2
        feasible = np.flatnonzero((da_sq <= R_sq) & (db_sq > R_sq))
        # the other nodes only matter when the candidate relay is feasible
        for i in feasible:
            others = sample_unit_disk(rng, cfg.region_radius, n_candidates)
            ox = others[:, 0]
            oy = others[:, 1]
            completes = (
                ((ox - k_pts[i, 0]) ** 2 + (oy - k_pts[i, 1]) ** 2 <= R_sq)
                & ((ox - delta) ** 2 + oy ** 2 <= R_sq)
                & (ox ** 2 + oy ** 2 > R_sq)
            )
            if completes.any():
                successes += 1
    fraction = successes / trials
    return fraction, _binomial_se(fraction, trials)


def estimate_Q(
    delta: float,
    cfg: NetworkConfig,
    trials: int,
    *,
    batch: int = 512,
) -> tuple[float, float]:
    """Fraction of placements with no feasible two-relay chain at all.

    Each trial places the far node at (delta, 0) and the other n-2 nodes
    uniformly; it counts toward Q when no (first relay, second relay) pair
    among them satisfies the three-hop shortest-path conditions.  Returns
    (fraction, binomial standard error).
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if delta <= cfg.R:
        raise ValueError(f"delta = {delta} must exceed the direct reach R = {cfg.R}")
    rng = trial_rng(cfg.seed, _delta_stream(_Q_TAG, delta))
    R_sq = cfg.R * cfg.R
    placed = cfg.n - 2
    no_relay = 0
    remaining = trials
    while remaining > 0:
        m = min(batch, remaining)
        remaining -= m
        pts = sample_unit_disk(rng, cfg.region_radius, m * placed).reshape(m, placed, 2)
        da_sq = pts[:, :, 0] ** 2 + pts[:, :, 1] ** 2
        db_sq = (pts[:, :, 0] - delta) ** 2 + pts[:, :, 1] ** 2
        # first relays sit in the hub's reach but not the far node's, and
        # second relays the other way around; the two sets are disjoint
        k_mask = (da_sq <= R_sq) & (db_sq > R_sq)
        l_mask = (db_sq <= R_sq) & (da_sq > R_sq)
        for t in range(m):
            firsts = pts[t][k_mask[t]]
            if firsts.size == 0:
                no_relay += 1
                continue
            seconds = pts[t][l_mask[t]]
            if seconds.size == 0:
                no_relay += 1
                continue
            gap_sq = ((firsts[:, None, :] - seconds[None, :, :]) ** 2).sum(axis=-1)
            if not (gap_sq <= R_sq).any():
                no_relay += 1
    fraction = no_relay / trials
    return fraction, _binomial_se(fraction, trials)


@dataclass(frozen=True)
class CalibrationResult:
    """Effective independent node count fitted to a no-relay probability."""

    n_prime: int
    Q_hat: float
    P_prime_analytic: float
    residual: float
    trials: int
    saturated: bool = False


def calibrate_n_prime(
    delta: float,
    cfg: NetworkConfig,
    Q_hat: float,
    P_prime: float,
    trials: int = 0,
) -> CalibrationResult:
    """Integer m in [1, n-2] minimizing |Q_hat - (1 - P_prime)^m|.

    The power is monotone in m, so rounding the log inversion and checking
    neighbors finds the exact argmin.  A zero Q_hat cannot be inverted and
    saturates at m = n-2.
    """
    if not (0.0 < P_prime < 1.0):
        raise ValueError(f"P_prime must lie in (0, 1), got {P_prime}")
    if not (0.0 <= Q_hat <= 1.0):
        raise ValueError(f"Q_hat must lie in [0, 1], got {Q_hat}")
    m_max = cfg.n - 2
    log_term = math.log1p(-P_prime)
    if Q_hat == 0.0:
        return CalibrationResult(
            n_prime=m_max,
            Q_hat=Q_hat,
            P_prime_analytic=P_prime,
            residual=math.exp(m_max * log_term),
            trials=trials,
            saturated=True,
        )
    m_star = math.log(Q_hat) / log_term
    anchor = int(math.floor(m_star))
    candidates = sorted({min(max(anchor + k, 1), m_max) for k in (-1, 0, 1, 2)})
    best = min(candidates, key=lambda m: (abs(Q_hat - math.exp(m * log_term)), m))
    return CalibrationResult(
        n_prime=best,
        Q_hat=Q_hat,
        P_prime_analytic=P_prime,
        residual=abs(Q_hat - math.exp(best * log_term)),
        trials=trials,
    )


def calibration_interval(
    cfg: NetworkConfig,
    Q_hat: float,
    Q_se: float,
    P_prime: float,
    width: float = 3.0,
) -> tuple[int, int]:
    """Integer range for the calibrated count from Q_hat +/- width * se."""
    if not (0.0 < P_prime < 1.0):
        raise ValueError(f"P_prime must lie in (0, 1), got {P_prime}")
    m_max = cfg.n - 2
    log_term = math.log1p(-P_prime)

    def invert(q: float) -> float:
        if q <= 0.0:
            return float(m_max)
        if q >= 1.0:
            return 1.0
        return math.log(q) / log_term

    high_q = min(Q_hat + width * Q_se, 1.0)
    low_q = max(Q_hat - width * Q_se, 0.0)
    lo = int(math.floor(invert(high_q)))
    hi = int(math.ceil(invert(low_q)))
    return max(lo, 1), min(hi, m_max)
