"""Command-line interface.

Exit codes: 0 on success, 1 for invalid input, 2 when a computed state
violates a numerical invariant.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import io
from .analysis import DEFAULT_LAMBDA_RANGE, negativity_report, squeezing_report
from .errors import NumericalInvariantError, ValidationError
from .experiments import FIGURE2_SPLITS, figure2_experiment, figureS1_experiment, run_sweep
from .grid import DEFAULT_HALF_EXTENT, DEFAULT_N_POINTS, make_grid
from .protocol import run_protocol
from .states import SqueezedThermalParams, WignerState, exact_nonlinear_gaussian, ideal_cubic_wigner, squeezed_thermal
from .transforms import PositionDensityMatrix, density_to_wigner

log = logging.getLogger("strobosim")

JOBS_ENV = "STROBOSIM_JOBS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _lambda_range(text: str):
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ValidationError(f"{JOBS_ENV} must be a positive integer, got {raw!r}") from None
    if jobs < 1:
        raise ValidationError(f"{JOBS_ENV} must be a positive integer, got {raw!r}")
    return jobs


def _parse_params(tokens) -> dict:
    params = {}
    for token in tokens or ():
        for item in token.split(","):
            if not item:
                continue
            key, sep, value = item.partition("=")
            if not sep:
                raise ValidationError(f"parameter {item!r} must look like name=value")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ValidationError(f"parameter {key!r} needs a number, got {value!r}") from None
    return params


def _as_wigner(state) -> WignerState:
    return density_to_wigner(state) if isinstance(state, PositionDensityMatrix) else state


def _write_report(path, state: WignerState, lambda_range) -> tuple:
    squeezing = squeezing_report(state, lambda_range)
    negativity = negativity_report(state)
    if path is not None:
        io.write_csv(path, io.REPORT_COLUMNS, io.report_rows(squeezing, negativity), [f"provenance={state.metadata}"])
    return squeezing, negativity


def _print_summary(squeezing, negativity) -> None:
    print(f"lambda_star={squeezing.lambda_star!r}")
    print(f"sigma3_min={squeezing.sigma3_min!r}")
    print(f"beats_vacuum={str(squeezing.beats_vacuum).lower()}")
    print(f"beats_shot_noise={str(squeezing.beats_shot_noise).lower()}")
    print(f"min_value={negativity.min_value!r}")
    print(f"negativity_volume={negativity.negativity_volume!r}")


def _cmd_simulate(args) -> int:
    config = io.load_config(args.config)
    if args.snapshots and args.out is None:
        raise ValidationError("--snapshots needs --out to name the snapshot files")
    trace = run_protocol(config, snapshot_each_period=args.snapshots)
    if args.out is not None:
        io.save_state(trace.final, args.out)
        if trace.snapshots:
            out = Path(args.out)
            for k, snap in enumerate(trace.snapshots, start=1):
                io.save_state(snap, out.with_name(f"{out.stem}.period{k:03d}{out.suffix}"))
    _print_summary(*_write_report(args.report, trace.final, args.lambda_range))
    return 0


def _cmd_sweep(args) -> int:
    spec = io.load_sweep_spec(args.config)
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    table = run_sweep(spec, jobs)
    io.atomic_write_text(args.out, io.sweep_table_csv(table))
    if args.heatmap is not None:
        io.write_pgm(args.heatmap, table.as_matrix())
    for cell, message in table.failures.items():
        print(f"failed cell {cell}: {message}", file=sys.stderr)
    return 0


def _cmd_analyze(args) -> int:
    state = _as_wigner(io.load_state(args.state))
    _print_summary(*_write_report(args.report, state, args.lambda_range))
    return 0


def _grid_from(params: dict):
    n_points = params.pop("n_points", DEFAULT_N_POINTS)
    if int(n_points) != n_points:
        raise ValidationError(f"n_points must be an integer, got {n_points}")
    return make_grid(int(n_points), params.pop("half_extent", DEFAULT_HALF_EXTENT))


def _cmd_reference(args) -> int:
    params = _parse_params(args.params)
    grid = _grid_from(params)
    allowed = {"airy": {"gamma"}, "exact-cubic": {"gamma", "s", "n0", "order"}, "squeezed-thermal": {"s", "n0"}}
    unknown = set(params) - allowed[args.kind]
    if unknown:
        raise ValidationError(f"--kind {args.kind} does not take {sorted(unknown)}")
    if args.kind == "airy":
        state = ideal_cubic_wigner(grid, params.get("gamma", 0.05))
    else:
        initial = SqueezedThermalParams(params.get("n0", 0.0), params.get("s", 1.0))
        if args.kind == "squeezed-thermal":
            state = squeezed_thermal(grid, initial)
        else:
            order = params.get("order", 3)
            if int(order) != order:
                raise ValidationError(f"order must be an integer, got {order}")
            state = exact_nonlinear_gaussian(grid, initial, params.get("gamma", 0.05), int(order))
    io.save_state(state, args.out)
    return 0


def _figure_grid(args):
    if args.n_points is None and args.half_extent is None:
        return None
    return make_grid(args.n_points or DEFAULT_N_POINTS, args.half_extent or DEFAULT_HALF_EXTENT)


def _cmd_fig2(args) -> int:
    result = figure2_experiment(FIGURE2_SPLITS, _figure_grid(args), args.lambda_range)
    io.atomic_write_text(args.out, io.figure2_summary_csv(result))
    log.info("wrote %s", args.out)
    if args.curves is not None:
        io.atomic_write_text(args.curves, io.figure2_curves_csv(result))
        log.info("wrote %s", args.curves)
    if args.cuts is not None:
        io.atomic_write_text(args.cuts, io.figure2_cuts_csv(result))
        log.info("wrote %s", args.cuts)
    best = result.best_split
    print(f"best_split={best[0]}x{best[1]}")
    return 0


def _cmd_figS1(args) -> int:
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    result = figureS1_experiment(parallelism=jobs)
    io.atomic_write_text(args.out, io.figureS1_csv(result))
    log.info("wrote %s", args.out)
    if args.heatmap is not None:
        io.write_pgm(args.heatmap, result.sigma3_min)
    for cell, message in result.failures.items():
        print(f"failed cell {cell}: {message}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strobosim", description="Phase-space simulator of stroboscopic nonlinear kicks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lam = dict(type=_lambda_range, default=DEFAULT_LAMBDA_RANGE, metavar="LO:HI:N")

    p = sub.add_parser("simulate", help="run the protocol from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--snapshots", action="store_true", help="also save the state after every period")
    p.add_argument("--out", help="final state file")
    p.add_argument("--report", help="report CSV")
    p.add_argument("--lambda-range", **lam)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="evaluate an observable over a parameter grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    p.add_argument("--heatmap", help="16-bit PGM of the result matrix")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("analyze", help="report on a saved state")
    p.add_argument("--state", required=True)
    p.add_argument("--lambda-range", **lam)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("reference", help="write a reference state")
    p.add_argument("--kind", required=True, choices=("airy", "exact-cubic", "squeezed-thermal"))
    p.add_argument("--params", nargs="*", default=[], metavar="NAME=VALUE",
                   help="gamma, s, n0, order, n_points, half_extent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reference)

    p = sub.add_parser("fig2", help="split comparison at fixed total gain")
    p.add_argument("--out", required=True, help="summary CSV")
    p.add_argument("--curves", help="sigma3(lambda) CSV")
    p.add_argument("--cuts", help="W(0, p) CSV")
    p.add_argument("--lambda-range", **lam)
    p.add_argument("--n-points", type=int)
    p.add_argument("--half-extent", type=float)
    p.set_defaults(func=_cmd_fig2)

    p = sub.add_parser("figS1", help="initial squeezing and occupation scan")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--heatmap")
    p.set_defaults(func=_cmd_figS1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalInvariantError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
