"""Reproducible numerical experiments and parameter sweeps.

* :func:`figure2_experiment` compares splits ``(M_T, N)`` of a fixed gain budget.
* :func:`figureS1_experiment` scans initial squeezing and occupation.
* :func:`run_sweep` evaluates one scalar observable over a one- or two-axis grid.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    DEFAULT_LAMBDA_RANGE,
    NegativityReport,
    SqueezingReport,
    negativity_report,
    optimal_lambda,
    squeezing_report,
)
from .errors import NumericalInvariantError, StrobosimError, ValidationError
from .grid import GridSpec, make_grid
from .protocol import ProtocolConfig, run_protocol
from .states import SqueezedThermalParams, exact_nonlinear_gaussian
from .transforms import ThermalKernelParams

__all__ = [
    "FIGURE2_SPLITS",
    "FIGURE_S1_S_VALUES",
    "FIGURE_S1_N0_VALUES",
    "FIGURE_S1_GRID",
    "OBSERVABLES",
    "SWEEP_PARAMETERS",
    "figure2_config",
    "SweepSpec",
    "SweepTable",
    "SplitResult",
    "Figure2Result",
    "FigureS1Result",
    "ExperimentAbortedError",
    "figure2_experiment",
    "figureS1_experiment",
    "run_sweep",
    "evaluate_observable",
]

log = logging.getLogger(__name__)

FIGURE2_SPLITS = ((1, 24), (2, 12), (3, 8), (4, 6), (6, 4), (8, 3), (12, 2), (24, 1))
FIGURE_S1_S_VALUES = (1.0, 1.25, 1.5, 1.75, 2.0)
FIGURE_S1_N0_VALUES = (0.0, 0.1, 0.2, 0.3, 0.4)
# wide enough for 6 sigma of the most thermal, most squeezed default cell
FIGURE_S1_GRID = make_grid(512, 17.0)

OBSERVABLES = ("sigma3_min", "lambda_star", "min_wigner", "negativity_volume")

# sweepable names mapped to how they modify a config
SWEEP_PARAMETERS = (
    "total_gain",
    "periods",
    "kicks_per_period",
    "kick_spacing_angle",
    "order",
    "s",
    "n0",
    "kernel_variance",
)
_INTEGER_PARAMETERS = {"periods", "kicks_per_period", "order"}


def figure2_config(periods: int = 4, kicks_per_period: int = 6, grid: GridSpec | None = None) -> ProtocolConfig:
    """Shared configuration of the split comparison: gain 0.05, s = 1.6, n0 = 0.05, kernel 0.03."""
    return ProtocolConfig(
        total_gain=0.05,
        periods=periods,
        kicks_per_period=kicks_per_period,
        kick_spacing_angle=math.pi / 180,
        order=3,
        initial=SqueezedThermalParams(0.05, 1.6),
        kernel=ThermalKernelParams(0.03),
        grid=make_grid() if grid is None else grid,
    )


def _apply(config: ProtocolConfig, name: str, value) -> ProtocolConfig:
    if name in _INTEGER_PARAMETERS:
        if float(value) != int(value):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if name == "s":
        return replace(config, initial=SqueezedThermalParams(config.initial.n0, value))
    if name == "n0":
        return replace(config, initial=SqueezedThermalParams(value, config.initial.s))
    if name == "kernel_variance":
        return replace(config, kernel=ThermalKernelParams(value))
    return replace(config, **{name: value})


def evaluate_observable(config: ProtocolConfig, observable: str) -> float:
    """Run the protocol once and reduce the final state to one number."""
    final = run_protocol(config).final
    if observable == "sigma3_min":
        return optimal_lambda(final)[1]
    if observable == "lambda_star":
        return optimal_lambda(final)[0]
    report = negativity_report(final)
    if observable == "min_wigner":
        return report.min_value
    if observable == "negativity_volume":
        return report.negativity_volume
    raise ValidationError(f"unknown observable {observable!r}")


@dataclass(frozen=True)
class SweepSpec:
    """One observable over a one- or two-parameter grid of protocol configs.

    Axes are ``(name, values)`` pairs with names from :data:`SWEEP_PARAMETERS`.
    """

    base: ProtocolConfig
    axis1: tuple
    axis2: tuple | None = None
    observable: str = "sigma3_min"

    def __post_init__(self):
        axes = [self._check_axis(self.axis1)]
        if self.axis2 is not None:
            axes.append(self._check_axis(self.axis2))
            if axes[0][0] == axes[1][0]:
                raise ValidationError(f"both axes sweep {axes[0][0]!r}")
        object.__setattr__(self, "axis1", axes[0])
        if self.axis2 is not None:
            object.__setattr__(self, "axis2", axes[1])
        if self.observable not in OBSERVABLES:
            raise ValidationError(f"observable must be one of {OBSERVABLES}, got {self.observable!r}")

    @staticmethod
    def _check_axis(axis) -> tuple:
        try:
            name, values = axis
        except (TypeError, ValueError):
            raise ValidationError(f"axis must be a (name, values) pair, got {axis!r}") from None
        if name not in SWEEP_PARAMETERS:
            raise ValidationError(f"unknown sweep parameter {name!r}; choose from {SWEEP_PARAMETERS}")
        values = tuple(values)
        if not values:
            raise ValidationError(f"axis {name!r} has no values")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"axis {name!r} has a non-finite or non-numeric value {v!r}")
        return name, values

    @property
    def names(self) -> tuple[str, ...]:
        return (self.axis1[0],) if self.axis2 is None else (self.axis1[0], self.axis2[0])

    @property
    def shape(self) -> tuple[int, ...]:
        if self.axis2 is None:
            return (len(self.axis1[1]),)
        return (len(self.axis1[1]), len(self.axis2[1]))

    def cells(self) -> list[tuple]:
        if self.axis2 is None:
            return [(v,) for v in self.axis1[1]]
        return [(a, b) for a in self.axis1[1] for b in self.axis2[1]]

    def config_for(self, cell: tuple) -> ProtocolConfig:
        config = self.base
        for name, value in zip(self.names, cell):
            config = _apply(config, name, value)
        return config


@dataclass(frozen=True)
class SweepTable:
    """Row-major results; failed cells hold NaN and an entry in ``failures``."""

    names: tuple[str, ...]
    observable: str
    rows: tuple[tuple, ...]
    failures: dict = field(default_factory=dict)
    shape: tuple[int, ...] = ()

    @property
    def values(self) -> np.ndarray:
        return np.array([row[-1] for row in self.rows], dtype=float)

    def as_matrix(self) -> np.ndarray:
        """Values reshaped to ``(len(axis1), len(axis2))`` for two-axis sweeps."""
        if len(self.shape) != 2:
            return self.values[:, None]
        return self.values.reshape(self.shape)


def _sweep_job(args):
    config, observable = args
    try:
        return evaluate_observable(config, observable), None
    except StrobosimError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, parallelism: int = 1) -> SweepTable:
    """Evaluate every cell; row order follows the axes regardless of ``parallelism``."""
    if isinstance(parallelism, bool) or int(parallelism) != parallelism or parallelism < 1:
        raise ValidationError(f"parallelism must be a positive integer, got {parallelism!r}")
    cells = spec.cells()
    jobs = []
    failures = {}
    for cell in cells:
        try:
            jobs.append((spec.config_for(cell), spec.observable))
        except ValidationError as exc:
            jobs.append(None)
            failures[cell] = f"{type(exc).__name__}: {exc}"

    runnable = [job for job in jobs if job is not None]
    if parallelism == 1 or len(runnable) <= 1:
        results = [_sweep_job(job) for job in runnable]
    else:
        with ProcessPoolExecutor(max_workers=min(int(parallelism), len(runnable))) as pool:
            results = list(pool.map(_sweep_job, runnable))

    rows = []
    outcomes = iter(results)
    for cell, job in zip(cells, jobs):
        value = math.nan
        if job is not None:
            value, error = next(outcomes)
            if error is not None:
                failures[cell] = error
        if cell in failures:
            log.warning("sweep cell %s failed: %s", cell, failures[cell])
        rows.append(tuple(cell) + (value,))
    return SweepTable(spec.names, spec.observable, tuple(rows), failures, spec.shape)


@dataclass(frozen=True)
class SplitResult:
    periods: int
    kicks_per_period: int
    squeezing: SqueezingReport
    negativity: NegativityReport
    cut_distance: float  # L2 distance of the W(0, p) cut to the reference cut


@dataclass(frozen=True)
class Figure2Result:
    splits: tuple[SplitResult, ...]
    reference_squeezing: SqueezingReport
    reference_negativity: NegativityReport
    complete: bool = True

    @property
    def best_split(self) -> tuple[int, int]:
        """Split with the smallest nonlinear variance."""
        best = min(self.splits, key=lambda r: r.squeezing.sigma3_min)
        return best.periods, best.kicks_per_period

    @property
    def closest_cut_split(self) -> tuple[int, int]:
        best = min(self.splits, key=lambda r: r.cut_distance)
        return best.periods, best.kicks_per_period


class ExperimentAbortedError(NumericalInvariantError):
    """A split failed its numerical checks; ``partial`` holds the completed splits."""

    def __init__(self, message, partial: Figure2Result):
        super().__init__(message)
        self.partial = partial


def figure2_experiment(
    splits=FIGURE2_SPLITS, grid: GridSpec | None = None, lambda_range=DEFAULT_LAMBDA_RANGE
) -> Figure2Result:
    """Run every split plus the undamped, unrotated single-gate reference."""
    splits = [tuple(split) for split in splits]
    if not splits:
        raise ValidationError("no splits given")
    for split in splits:
        if len(split) != 2 or any(int(v) != v or v < 1 for v in split):
            raise ValidationError(f"split must be two positive integers, got {split!r}")
    configs = [figure2_config(int(m), int(n), grid) for m, n in splits]

    base = configs[0]
    reference = exact_nonlinear_gaussian(base.grid, base.initial, base.total_gain, base.order)
    ref_squeezing = squeezing_report(reference, lambda_range)
    ref_negativity = negativity_report(reference)

    results = []
    for config in configs:
        try:
            final = run_protocol(config).final
        except NumericalInvariantError as exc:
            partial = Figure2Result(tuple(results), ref_squeezing, ref_negativity, complete=False)
            raise ExperimentAbortedError(
                f"split ({config.periods}, {config.kicks_per_period}) failed: {exc}", partial
            ) from exc
        negativity = negativity_report(final)
        distance = float(
            np.sqrt(np.sum((negativity.cut[:, 1] - ref_negativity.cut[:, 1]) ** 2) * config.grid.spacing)
        )
        results.append(
            SplitResult(config.periods, config.kicks_per_period, squeezing_report(final, lambda_range), negativity, distance)
        )
        log.info("split (%d, %d) done", config.periods, config.kicks_per_period)
    return Figure2Result(tuple(results), ref_squeezing, ref_negativity)


@dataclass(frozen=True)
class FigureS1Result:
    s_values: tuple[float, ...]
    n0_values: tuple[float, ...]
    sigma3_min: np.ndarray  # shape (len(s_values), len(n0_values)); NaN marks a failed cell
    split: tuple[int, int]
    grid: GridSpec
    failures: dict


def figureS1_experiment(
    s_values=FIGURE_S1_S_VALUES,
    n0_values=FIGURE_S1_N0_VALUES,
    split: tuple[int, int] = (2, 12),
    grid: GridSpec = FIGURE_S1_GRID,
    parallelism: int = 1,
) -> FigureS1Result:
    """Nonlinear variance after the protocol over a grid of initial states.

    ``split`` defaults to the best split of :func:`figure2_experiment` on the default grid.
    Cells whose initial state does not fit on ``grid`` are recorded as NaN.
    """
    for s in s_values:
        if not 0.5 <= s <= 3.0:
            raise ValidationError(f"s must lie in [0.5, 3], got {s}")
    for n0 in n0_values:
        if not 0.0 <= n0 <= 1.0:
            raise ValidationError(f"n0 must lie in [0, 1], got {n0}")
    base = figure2_config(split[0], split[1], grid)
    spec = SweepSpec(base, ("s", tuple(s_values)), ("n0", tuple(n0_values)), "sigma3_min")
    table = run_sweep(spec, parallelism)
    return FigureS1Result(
        tuple(s_values), tuple(n0_values), table.as_matrix(), tuple(split), grid, dict(table.failures)
    )
