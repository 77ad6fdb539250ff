"""Command-line interface: reproducible experiments, plot-ready files.

Subcommands mirror the workflow: `analytic` evaluates the closed-form and
quadrature predictions on the bin grid, `simulate` runs the Monte Carlo
estimator, `calibrate` fits the effective independent node count,
`fit` summarizes simulated densities by Gaussians, and `compare` reports
deviations between analytic and simulated grids.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic, fitting, io, mcsim
from .analytic import GridKind, NetworkConfig
from .quadrature import QuadratureSpec

__all__ = [
    "ExperimentConfig",
    "cmd_analytic",
    "cmd_simulate",
    "cmd_calibrate",
    "cmd_fit",
    "cmd_compare",
    "build_parser",
    "main",
]

DESK_TRIALS = {"simulate": 10_000, "calibrate": 100_000}
PAPER_TRIALS = {"simulate": 1_000_000, "calibrate": 1_000_000_000}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one command needs, including all reproducibility inputs."""

    network: NetworkConfig
    trials: int
    d_max: int
    output_dir: Path
    output_format: str = "csv"
    bin_width: float = mcsim.DEFAULT_BIN_WIDTH
    workers: int = 1
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    n_prime_override: int | None = None
    paper_scale: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not (1 <= self.d_max <= self.network.n - 1):
            raise ValueError(
                f"d_max must lie in [1, {self.network.n - 1}], got {self.d_max}"
            )
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.bin_width <= 0.0:
            raise ValueError("bin width must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def quad_spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions)

    def header(self, command: str) -> dict:
        net = self.network
        return {
            "command": command,
            "n": net.n,
            "z": net.z,
            "R": net.R,
            "region_radius": net.region_radius,
            "seed": net.seed,
            "trials": self.trials,
            "d_max": self.d_max,
            "bin_width": self.bin_width,
            "workers": self.workers,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_subdivisions": self.max_subdivisions,
            "n_prime": self.n_prime_override,
            "paper_scale": self.paper_scale,
        }


def _resolve_n_prime(config: ExperimentConfig, calibration: Path | None) -> int:
    if config.n_prime_override is not None:
        return config.n_prime_override
    if calibration is not None:
        doc = _read_calibration(calibration)
        return int(doc["n_prime"])
    raise ValueError(
        "three-hop predictions need the calibrated node count: pass --n-prime, "
        "or run `rggdist calibrate` and pass the artifact via --calibration"
    )


def _read_calibration(path: Path) -> dict:
    path = Path(path)
    if path.suffix == ".json":
        doc = io.read_json_doc(path)
        record = doc.get("calibration", doc)
    else:
        rows = [
            line for line in path.read_text().splitlines()
            if line.strip() and not line.startswith("#")
        ]
        if len(rows) != 2:
            raise ValueError(f"{path}: not a calibration artifact")
        record = dict(zip(rows[0].split(","), rows[1].split(",")))
    if "n_prime" not in record:
        raise ValueError(f"{path}: no n_prime field; not a calibration artifact")
    return record


def cmd_analytic(config: ExperimentConfig, calibration: Path | None = None) -> list[Path]:
    """Evaluate the hop-count probabilities and distance densities on the grid."""
    net = config.network
    spec = config.quad_spec()
    mids = mcsim.bin_midpoints(net.region_radius, config.bin_width)
    d_top = min(config.d_max, 3)
    n_prime = _resolve_n_prime(config, calibration) if d_top >= 3 else None

    curves: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for d in range(1, d_top + 1):
        if d == 1:
            prob = np.array([analytic.prob_d1(m, net) for m in mids])
            dens_fn = lambda r: analytic.pdf_d1(r, net)
            dens = np.array([dens_fn(m) for m in mids])
        elif d == 2:
            prob = np.array([analytic.prob_d2(m, net) for m in mids])
            pdf = analytic.density_from_prob(
                lambda r: analytic.prob_d2(r, net), 2, net, spec
            )
            dens = np.array([pdf(m) for m in mids])
        else:
            assert n_prime is not None
            prob = np.array([analytic.prob_d3(m, net, n_prime, spec) for m in mids])
            pdf = analytic.density_from_prob(
                lambda r: analytic.prob_d3(r, net, n_prime, spec), 3, net, spec
            )
            dens = np.array([pdf(m) for m in mids])
        curves[d] = (prob, dens)

    header = config.header("analytic")
    if n_prime is not None:
        header["n_prime"] = n_prime
    written: list[Path] = []
    if config.output_format == "json":
        doc = {
            "config": header,
            "grids": [
                rec
                for d, (prob, dens) in sorted(curves.items())
                for rec in (
                    io.grid_record("P", d, mids, prob, None),
                    io.grid_record("p", d, mids, dens, None),
                )
            ],
        }
        written.append(io.write_json_doc(config.output_dir / "analytic.json", doc))
    else:
        for d, (prob, dens) in sorted(curves.items()):
            written.append(
                io.write_grid_csv(
                    config.output_dir / f"P_d{d}.csv",
                    {**header, "kind": "P", "d": d},
                    mids, prob,
                )
            )
            written.append(
                io.write_grid_csv(
                    config.output_dir / f"p_d{d}.csv",
                    {**header, "kind": "p", "d": d},
                    mids, dens,
                )
            )
    return written


def cmd_simulate(config: ExperimentConfig) -> list[Path]:
    """Run the Monte Carlo estimator and write both conditional families."""
    net = config.network
    started = time.perf_counter()
    matrix = mcsim.accumulate(
        net, config.trials, workers=config.workers, bin_width=config.bin_width
    )
    elapsed = time.perf_counter() - started
    prob_grids, density_grids = mcsim.grids_from_matrix(matrix, d_max=config.d_max)
    unreachable_fraction = matrix.unreachable / (matrix.trials * (net.n - 1))
    # wall time and the unreachable share go to the console only: the files
    # must be byte-identical across reruns with the same seed
    print(
        f"simulate: {matrix.trials} trials in {elapsed:.1f}s, "
        f"unreachable fraction {unreachable_fraction:.3e}",
        file=sys.stderr,
    )

    header = config.header("simulate")
    written: list[Path] = []
    if config.output_format == "json":
        doc = {
            "config": header,
            "grids": [
                rec
                for d in sorted(prob_grids)
                for rec in (
                    io.grid_record(
                        "P", d, prob_grids[d].delta_bins,
                        prob_grids[d].values, prob_grids[d].counts,
                    ),
                    io.grid_record(
                        "p", d, density_grids[d].delta_bins,
                        density_grids[d].values, density_grids[d].counts,
                    ),
                )
            ],
        }
        written.append(io.write_json_doc(config.output_dir / "simulate.json", doc))
    else:
        for d in sorted(prob_grids):
            pg, dg = prob_grids[d], density_grids[d]
            written.append(
                io.write_grid_csv(
                    config.output_dir / f"P_hat_d{d}.csv",
                    {**header, "kind": "P", "d": d},
                    pg.delta_bins, pg.values, pg.counts,
                )
            )
            written.append(
                io.write_grid_csv(
                    config.output_dir / f"p_hat_d{d}.csv",
                    {**header, "kind": "p", "d": d},
                    dg.delta_bins, dg.values, dg.counts,
                )
            )
    return written


def cmd_calibrate(config: ExperimentConfig, delta: float | None = None) -> list[Path]:
    """Estimate the no-relay probability and fit the effective node count.

    Defaults to separation 2R, where the two-hop lens vanishes and the
    three-hop term is isolated.
    """
    net = config.network
    if delta is None:
        delta = 2.0 * net.R
    spec = config.quad_spec()
    p_prime = analytic.prob_prime_d3(delta, net, spec)
    q_hat, q_se = mcsim.estimate_Q(delta, net, config.trials)
    result = mcsim.calibrate_n_prime(delta, net, q_hat, p_prime, trials=config.trials)
    lo, hi = mcsim.calibration_interval(net, q_hat, q_se, p_prime)
    record = {
        "delta": delta,
        "n_prime": result.n_prime,
        "Q_hat": result.Q_hat,
        "Q_se": q_se,
        "P_prime": result.P_prime_analytic,
        "residual": result.residual,
        "trials": result.trials,
        "saturated": result.saturated,
        "interval_low": lo,
        "interval_high": hi,
    }
    print(
        f"calibrate: n_prime = {result.n_prime} (interval [{lo}, {hi}]), "
        f"Q_hat = {q_hat:.6f} +/- {q_se:.2e}, P_prime = {p_prime:.6e}",
        file=sys.stderr,
    )
    header = config.header("calibrate")
    if config.output_format == "json":
        doc = {"config": header, "calibration": record}
        return [io.write_json_doc(config.output_dir / "calibration.json", doc)]
    lines = [f"# rggdist-grid v1"]
    for key, value in {**header}.items():
        lines.append(f"# {key} = {_json_scalar(value)}")
    columns = list(record)
    lines.append(",".join(columns))
    lines.append(",".join(_csv_scalar(record[c]) for c in columns))
    path = config.output_dir / "calibration.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return [path]


def _json_scalar(value) -> str:
    import json

    return json.dumps(value)


def _csv_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_fit(
    config: ExperimentConfig,
    source: Path,
    d_list: list[int],
    *,
    refine: bool = False,
    exclude_border: bool = False,
    force: bool = False,
) -> list[Path]:
    """Fit Gaussians to simulated densities for the requested hop counts."""
    net = config.network
    if not force:
        low = [d for d in d_list if d <= 3]
        if low:
            raise ValueError(
                f"hop counts {low} have analytic densities; pass --force to fit anyway"
            )
    max_mid = net.region_radius - net.R if exclude_border else None
    rows = []
    for d in d_list:
        _, delta, values, counts = io.find_grid(source, "p", d)
        grid = analytic.ConditionalGrid(
            d=d, delta_bins=delta, values=values,
            kind=GridKind.DENSITY_p, counts=counts,
        )
        fit = fitting.fit_gaussian(grid, refine=refine, max_midpoint=max_mid)
        row = {
            "d": d,
            "mu": fit.mu,
            "sigma": fit.sigma,
            "r_squared": fit.r_squared,
        }
        if refine:
            moments = fitting.fit_gaussian(grid, refine=False, max_midpoint=max_mid)
            row["r_squared_moments"] = moments.r_squared
        rows.append(row)

    header = config.header("fit")
    if config.output_format == "json":
        doc = {"config": header, "fits": rows}
        return [io.write_json_doc(config.output_dir / "fits.json", doc)]
    columns = list(rows[0]) if rows else ["d", "mu", "sigma", "r_squared"]
    lines = ["# rggdist-grid v1"]
    for key, value in header.items():
        lines.append(f"# {key} = {_json_scalar(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_csv_scalar(row[c]) for c in columns))
    path = config.output_dir / "fits.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return [path]


def cmd_compare(
    config: ExperimentConfig,
    analytic_source: Path,
    simulated_source: Path,
    d_list: list[int],
    *,
    min_count: int = 500,
    gate: float | None = None,
) -> tuple[list[dict], int]:
    """Per-d deviation report between analytic and simulated probabilities.

    Bins with fewer than min_count samples are skipped.  Returns the report
    rows and an exit status: nonzero when a gate is set and exceeded.
    """
    rows = []
    worst = 0.0
    for d in d_list:
        _, delta_a, values_a, _ = io.find_grid(analytic_source, "P", d)
        _, delta_s, values_s, counts_s = io.find_grid(simulated_source, "P", d)
        if len(delta_a) != len(delta_s) or np.max(np.abs(delta_a - delta_s)) > 1e-9:
            width_a = float(np.median(np.diff(delta_a))) if len(delta_a) > 1 else math.nan
            width_s = float(np.median(np.diff(delta_s))) if len(delta_s) > 1 else math.nan
            raise ValueError(
                f"bin grids do not match for d = {d}: widths {width_a:.6g} vs "
                f"{width_s:.6g}, sizes {len(delta_a)} vs {len(delta_s)}"
            )
        populated = counts_s >= min_count
        deviations = np.abs(values_a[populated] - values_s[populated])
        max_dev = float(deviations.max()) if deviations.size else 0.0
        mean_dev = float(deviations.mean()) if deviations.size else 0.0
        worst = max(worst, max_dev)
        rows.append(
            {
                "d": d,
                "bins_compared": int(populated.sum()),
                "max_abs_dev": max_dev,
                "mean_abs_dev": mean_dev,
            }
        )
        print(
            f"compare: d = {d}: max |dev| = {max_dev:.5f}, "
            f"mean |dev| = {mean_dev:.5f} over {int(populated.sum())} bins",
            file=sys.stderr,
        )
    status = 1 if (gate is not None and worst > gate) else 0

    header = config.header("compare")
    header["min_count"] = min_count
    header["gate"] = gate
    if config.output_format == "json":
        io.write_json_doc(
            config.output_dir / "compare.json", {"config": header, "report": rows}
        )
    else:
        columns = ["d", "bins_compared", "max_abs_dev", "mean_abs_dev"]
        lines = ["# rggdist-grid v1"]
        for key, value in header.items():
            lines.append(f"# {key} = {_json_scalar(value)}")
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_csv_scalar(row[c]) for c in columns))
        path = config.output_dir / "compare.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    return rows, status


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggdist",
        description=(
            "Hop-count vs Euclidean-distance conditional distributions for "
            "two-dimensional random geometric graphs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_positive_int, default=1000, help="node count")
    radius_group = common.add_mutually_exclusive_group()
    radius_group.add_argument(
        "--z-pi", type=float, default=None,
        help="expected connectivity as a multiple of pi (default 3)",
    )
    radius_group.add_argument(
        "--radius", type=float, default=None, help="communication radius R"
    )
    common.add_argument("--seed", type=int, default=0, help="RNG seed")
    common.add_argument("--trials", type=_positive_int, default=None)
    common.add_argument("--bins-width", type=float, default=mcsim.DEFAULT_BIN_WIDTH)
    common.add_argument("--d-max", type=_positive_int, default=12)
    common.add_argument("--out", type=Path, default=Path("results"))
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--n-prime", type=_positive_int, default=None)
    common.add_argument(
        "--paper-scale", action="store_true",
        help="raise trial counts to publication scale (slow)",
    )
    common.add_argument("--rel-tol", type=float, default=1e-8)
    common.add_argument("--abs-tol", type=float, default=1e-12)
    common.add_argument("--max-subdivisions", type=_positive_int, default=2000)

    p_analytic = sub.add_parser(
        "analytic", parents=[common], help="evaluate predictions on the bin grid"
    )
    p_analytic.add_argument(
        "--calibration", type=Path, default=None,
        help="calibration artifact supplying the three-hop node count",
    )

    sub.add_parser("simulate", parents=[common], help="run the Monte Carlo estimator")

    p_cal = sub.add_parser(
        "calibrate", parents=[common], help="fit the effective independent node count"
    )
    p_cal.add_argument(
        "--delta", type=float, default=None,
        help="separation at which to calibrate (default 2R)",
    )

    p_fit = sub.add_parser(
        "fit", parents=[common], help="fit Gaussians to simulated densities"
    )
    p_fit.add_argument("--input", type=Path, required=True,
                       help="simulated density grids (directory or document)")
    p_fit.add_argument("--d", type=_positive_int, nargs="+", required=True)
    p_fit.add_argument("--refine", action="store_true",
                       help="least-squares refinement of the moment fit")
    p_fit.add_argument("--exclude-border", action="store_true",
                       help="drop bins within R of the region border")
    p_fit.add_argument("--force", action="store_true",
                       help="fit hop counts that have analytic densities")

    p_cmp = sub.add_parser(
        "compare", parents=[common], help="deviation report analytic vs simulated"
    )
    p_cmp.add_argument("--analytic", type=Path, required=True, dest="analytic_source")
    p_cmp.add_argument("--simulated", type=Path, required=True, dest="simulated_source")
    p_cmp.add_argument("--d", type=_positive_int, nargs="+", required=True)
    p_cmp.add_argument("--min-count", type=int, default=500)
    p_cmp.add_argument("--gate", type=float, default=None,
                       help="fail (nonzero exit) when any max deviation exceeds this")
    return parser


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.radius is not None:
        network = NetworkConfig.from_radius(args.n, args.radius, seed=args.seed)
    else:
        z_pi = 3.0 if args.z_pi is None else args.z_pi
        network = NetworkConfig.from_z(args.n, z_pi * math.pi, seed=args.seed)
    trials = args.trials
    if trials is None:
        scale = PAPER_TRIALS if args.paper_scale else DESK_TRIALS
        trials = scale.get(args.command, DESK_TRIALS["simulate"])
    return ExperimentConfig(
        network=network,
        trials=trials,
        d_max=args.d_max,
        output_dir=args.out,
        output_format=args.format,
        bin_width=args.bins_width,
        workers=args.workers,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        max_subdivisions=args.max_subdivisions,
        n_prime_override=args.n_prime,
        paper_scale=args.paper_scale,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = experiment_from_args(args)
        if args.command == "analytic":
            written = cmd_analytic(config, calibration=args.calibration)
        elif args.command == "simulate":
            written = cmd_simulate(config)
        elif args.command == "calibrate":
            written = cmd_calibrate(config, delta=args.delta)
        elif args.command == "fit":
            written = cmd_fit(
                config, args.input, args.d,
                refine=args.refine,
                exclude_border=args.exclude_border,
                force=args.force,
            )
        elif args.command == "compare":
            _, status = cmd_compare(
                config, args.analytic_source, args.simulated_source, args.d,
                min_count=args.min_count, gate=args.gate,
            )
            return status
        else:  # pragma: no cover
            raise AssertionError(args.command)
    except (ValueError, FileNotFoundError) as exc:
        print(f"rggdist: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
