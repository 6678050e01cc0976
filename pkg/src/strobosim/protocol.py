"""Stroboscopic protocol: N kicks per mechanical period, repeated for M_T periods.

One period applies ``N`` times [kick, rotate by the kick spacing], then the
rotation that completes the period to exactly ``2 pi``, then the thermal kernel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .analysis import moment
from .errors import NormDriftError, ValidationError
from .grid import GridSpec, make_grid
from .states import SqueezedThermalParams, WignerState, squeezed_thermal
from .transforms import ThermalKernelParams, damp, kick_wigner, rotate

__all__ = [
    "ProtocolConfig",
    "StepRecord",
    "ProtocolTrace",
    "WrapAroundWarning",
    "single_period",
    "run_protocol",
    "continue_protocol",
    "final_state",
    "trotter_convergence",
    "refine",
]

DEFAULT_KICK_SPACING = math.pi / 180
STEP_NORM_TOLERANCE = 1e-6
ABORT_NORM_TOLERANCE = 1e-5
# the 6-sigma ellipse of the state must stay inside [-L, L)^2
_SIGMA_COVERAGE = 6.0


class WrapAroundWarning(RuntimeWarning):
    """The state spread too close to the grid edge, where FFT rotations wrap around."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Physical and scheduling parameters of one protocol run.

    Attributes:
        total_gain: nonlinear gain accumulated over the whole run.
        periods: number of mechanical periods ``M_T``.
        kicks_per_period: Trotter number ``N``.
        kick_spacing_angle: rotation between kicks, ``Omega_m * dt`` in radians.
        order: power ``k`` of the nonlinear potential.
        initial: squeezed thermal starting state.
        kernel: per-period thermal kernel.
        grid: phase-space grid.
    """

    total_gain: float = 0.05
    periods: int = 4
    kicks_per_period: int = 6
    kick_spacing_angle: float = DEFAULT_KICK_SPACING
    order: int = 3
    initial: SqueezedThermalParams = field(default_factory=lambda: SqueezedThermalParams(0.05, 1.6))
    kernel: ThermalKernelParams = field(default_factory=lambda: ThermalKernelParams(0.03))
    grid: GridSpec = field(default_factory=make_grid)

    def __post_init__(self):
        for name in ("periods", "kicks_per_period", "order"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.periods < 1 or self.kicks_per_period < 1:
            raise ValidationError("periods and kicks_per_period must be positive")
        if self.order < 3:
            raise ValidationError(f"order must be >= 3, got {self.order}")
        if not math.isfinite(self.total_gain):
            raise ValidationError(f"total_gain must be finite, got {self.total_gain}")
        if not (math.isfinite(self.kick_spacing_angle) and self.kick_spacing_angle >= 0):
            raise ValidationError(f"kick_spacing_angle must be >= 0, got {self.kick_spacing_angle}")
        if self.kicks_per_period * self.kick_spacing_angle >= 2 * math.pi:
            raise ValidationError(
                f"kick window {self.kicks_per_period} x {self.kick_spacing_angle:.6g} rad "
                "must be shorter than one period"
            )
        if not math.isfinite(self.pulse_gain):
            raise ValidationError("per-pulse gain is not finite")

    @property
    def pulse_gain(self) -> float:
        return self.total_gain / (self.periods * self.kicks_per_period)

    @property
    def closing_angle(self) -> float:
        """Rotation that completes a period after the kick window."""
        return 2 * math.pi - self.kicks_per_period * self.kick_spacing_angle

    def to_dict(self) -> dict:
        return {
            "total_gain": self.total_gain,
            "periods": self.periods,
            "kicks_per_period": self.kicks_per_period,
            "kick_spacing_angle": self.kick_spacing_angle,
            "order": self.order,
            "initial": {"n0": self.initial.n0, "s": self.initial.s},
            "kernel": {"kernel_variance": self.kernel.kernel_variance},
            "grid": self.grid.to_dict(),
        }


@dataclass(frozen=True)
class StepRecord:
    kind: str
    parameter: float
    norm_defect: float


@dataclass(frozen=True)
class ProtocolTrace:
    final: WignerState
    step_log: tuple[StepRecord, ...]
    snapshots: tuple[WignerState, ...] | None = None

    @property
    def max_norm_defect(self) -> float:
        return max((r.norm_defect for r in self.step_log), default=0.0)


def _coverage_reach(state: WignerState) -> float:
    """Largest ``|mean| + 6 sigma`` over both quadratures."""
    reach = 0.0
    for a, b in ((1, 0), (0, 1)):
        mean = moment(state, a, b)
        var = moment(state, 2 * a, 2 * b) - mean ** 2
        reach = max(reach, abs(mean) + _SIGMA_COVERAGE * math.sqrt(max(var, 0.0)))
    return reach


def single_period(state: WignerState, config: ProtocolConfig, log: list | None = None) -> WignerState:
    """Apply one period of the protocol to ``state``."""
    if state.grid != config.grid:
        raise ValidationError("state grid does not match config grid")

    def record(kind, parameter, current):
        if log is not None:
            log.append(StepRecord(kind, parameter, current.norm_defect))
        return current

    gain = config.pulse_gain
    for _ in range(config.kicks_per_period):
        state = record("kick", gain, kick_wigner(state, gain, config.order))
        state = record("rotate", config.kick_spacing_angle, rotate(state, config.kick_spacing_angle))
    state = record("rotate", config.closing_angle, rotate(state, config.closing_angle))
    state = record("damp", config.kernel.kernel_variance, damp(state, config.kernel))

    reach = _coverage_reach(state)
    if reach > state.grid.half_extent:
        warnings.warn(
            f"state reaches {reach:.4g} at 6 sigma, beyond half_extent {state.grid.half_extent:.4g}; "
            "FFT rotations will wrap around",
            WrapAroundWarning,
            stacklevel=2,
        )
    return state


def continue_protocol(
    state: WignerState, config: ProtocolConfig, periods: int, snapshot_each_period: bool = False
) -> ProtocolTrace:
    """Apply ``periods`` further periods of ``config`` to an existing state."""
    log: list[StepRecord] = []
    snapshots = [] if snapshot_each_period else None
    for _ in range(periods):
        state = single_period(state, config, log)
        worst = max(r.norm_defect for r in log[-(2 * config.kicks_per_period + 2):])
        if worst > ABORT_NORM_TOLERANCE:
            raise NormDriftError(f"norm defect {worst:.3e} exceeds {ABORT_NORM_TOLERANCE:g}", log)
        if snapshots is not None:
            snapshots.append(state)
    return ProtocolTrace(state, tuple(log), None if snapshots is None else tuple(snapshots))


def run_protocol(config: ProtocolConfig, snapshot_each_period: bool = False) -> ProtocolTrace:
    """Prepare the squeezed thermal state and run all ``config.periods`` periods."""
    initial = squeezed_thermal(config.grid, config.initial)
    trace = continue_protocol(initial, config, config.periods, snapshot_each_period)
    meta = (
        f"protocol gain={config.total_gain!r} periods={config.periods} kicks={config.kicks_per_period} "
        f"spacing={config.kick_spacing_angle!r} order={config.order} s={config.initial.s!r} "
        f"n0={config.initial.n0!r} kernel={config.kernel.kernel_variance!r}"
    )
    return replace(trace, final=trace.final.with_values(trace.final.values, meta))


@lru_cache(maxsize=8)
def final_state(config: ProtocolConfig) -> WignerState:
    """Memoized final state of :func:`run_protocol` (runs are deterministic)."""
    return run_protocol(config).final


def refine(config: ProtocolConfig, refinement: int) -> ProtocolConfig:
    """Same kick window and total gain, ``refinement`` times more kicks."""
    return replace(
        config,
        kicks_per_period=config.kicks_per_period * refinement,
        kick_spacing_angle=config.kick_spacing_angle / refinement,
    )


def trotter_convergence(config: ProtocolConfig, refinement: int) -> float:
    """L-infinity distance between the runs refined ``refinement`` and ``refinement // 2`` times.

    Successive halvings of the Trotter step should give shrinking distances.
    """
    if isinstance(refinement, bool) or int(refinement) != refinement or refinement < 1:
        raise ValidationError(f"refinement must be a positive integer, got {refinement!r}")
    coarse = max(int(refinement) // 2, 1)
    if coarse == refinement:
        return 0.0
    fine_state = final_state(refine(config, int(refinement)))
    coarse_state = final_state(refine(config, coarse))
    return float(np.max(np.abs(fine_state.values - coarse_state.values)))
