"""Initial and reference states on the phase-space grid.

Convention throughout: ``[x, p] = 2i`` so the vacuum has unit variance in
each quadrature.  A nonlinear gate of gain ``g`` and order ``k`` maps
``p -> p + k g x**(k-1)`` (so the cubic gate has ``lambda* = 3 g``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import airy

from .errors import GridOverflowError, ResolutionError, ValidationError
from .grid import GridSpec

__all__ = [
    "WignerState",
    "SqueezedThermalParams",
    "squeezed_thermal",
    "vacuum",
    "ideal_cubic_wigner",
    "exact_nonlinear_gaussian",
    "squeezed_thermal_density",
    "purity",
]

# fraction of the grid the 6-sigma ellipse may occupy
_SIGMA_COVERAGE = 6.0


@dataclass(frozen=True, eq=False)
class WignerState:
    """Real Wigner function sampled on ``grid``, indexed ``values[x_index, p_index]``."""

    grid: GridSpec
    values: np.ndarray
    metadata: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        n = self.grid.n_points
        if values.shape != (n, n):
            raise ValidationError(f"values shape {values.shape} does not match grid ({n}, {n})")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Wigner values must be finite")
        values = values.copy() if values is self.values else values
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def norm(self) -> float:
        return float(self.values.sum() * self.grid.spacing ** 2)

    @property
    def norm_defect(self) -> float:
        return abs(self.norm - 1.0)

    def with_values(self, values: np.ndarray, metadata: str | None = None) -> "WignerState":
        return WignerState(self.grid, values, self.metadata if metadata is None else metadata)

    def normalized(self) -> "WignerState":
        return self.with_values(self.values / self.norm)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.spacing

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.spacing


@dataclass(frozen=True)
class SqueezedThermalParams:
    """Thermal occupation ``n0`` squeezed by ``s`` (``Var x = s^2 (2 n0 + 1)``)."""

    n0: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.n0) and self.n0 >= 0):
            raise ValidationError(f"n0 must be >= 0, got {self.n0}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise ValidationError(f"s must be > 0, got {self.s}")

    @property
    def var_x(self) -> float:
        return self.s ** 2 * (2 * self.n0 + 1)

    @property
    def var_p(self) -> float:
        return (2 * self.n0 + 1) / self.s ** 2


def _check_fits(grid: GridSpec, params: SqueezedThermalParams) -> None:
    widest = math.sqrt(max(params.var_x, params.var_p))
    if _SIGMA_COVERAGE * widest > grid.half_extent:
        raise GridOverflowError(
            f"squeezed thermal state (s={params.s}, n0={params.n0}) needs half_extent >= "
            f"{_SIGMA_COVERAGE * widest:.4g}, grid has {grid.half_extent:.4g}"
        )


def squeezed_thermal(grid: GridSpec, params: SqueezedThermalParams) -> WignerState:
    _check_fits(grid, params)
    x = grid.axis[:, None]
    p = grid.axis[None, :]
    width = 2 * params.n0 + 1
    values = np.exp(-((x / params.s) ** 2 + (p * params.s) ** 2) / (2 * width)) / (2 * math.pi * width)
    raw = values.sum() * grid.spacing ** 2
    return WignerState(grid, values / raw, f"squeezed_thermal s={params.s!r} n0={params.n0!r}")


def vacuum(grid: GridSpec) -> WignerState:
    return squeezed_thermal(grid, SqueezedThermalParams(0.0, 1.0))


def ideal_cubic_wigner(grid: GridSpec, gamma: float) -> WignerState:
    """Airy-profile Wigner function ``Ai[(4/(3 gamma))^(1/3) (3 gamma x^2 - p)]``.

    The ideal state is not normalizable; the grid-truncated field is normalized
    to unit mass on the grid and the discarded fraction is not recoverable.

    Raises:
        ResolutionError: if the local oscillation period of the argument is below
            four samples anywhere on the grid.
    """
    if not (math.isfinite(gamma) and gamma > 0):
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    scale = (4.0 / (3.0 * gamma)) ** (1.0 / 3.0)
    x = grid.axis[:, None]
    p = grid.axis[None, :]
    arg = scale * (3 * gamma * x ** 2 - p)

    # Ai(-a) oscillates with local wavenumber sqrt(a) in its argument; check each axis
    local = np.sqrt(np.maximum(-arg, 0.0)) * scale
    wavenumber = max(float((local * np.abs(6 * gamma * x)).max()), float(local.max()))
    period = 2 * math.pi / max(wavenumber, 1e-300)
    if period < 4 * grid.spacing:
        raise ResolutionError(
            f"Airy oscillation period {period:.4g} is under 4 samples (spacing {grid.spacing:.4g}); "
            "refine the grid or shrink its extent"
        )

    values = airy(arg)[0]
    mass = values.sum() * grid.spacing ** 2
    return WignerState(
        grid, values / mass, f"ideal_cubic gamma={gamma!r} grid_mass_before_normalization={float(mass)!r}"
    )


def squeezed_thermal_density(axis: np.ndarray, params: SqueezedThermalParams) -> np.ndarray:
    """Analytic ``<u|rho|v>`` of the squeezed thermal state on ``axis``.

    Built from ``rho(x + y, x - y) = P(x) exp(-Var_p y^2 / 2)`` with ``P`` the
    Gaussian position marginal.
    """
    u = axis[:, None]
    v = axis[None, :]
    center = 0.5 * (u + v)
    half_chord = 0.5 * (u - v)
    marginal = np.exp(-center ** 2 / (2 * params.var_x)) / math.sqrt(2 * math.pi * params.var_x)
    return marginal * np.exp(-params.var_p * half_chord ** 2 / 2) + 0j


def exact_nonlinear_gaussian(
    grid: GridSpec, params: SqueezedThermalParams, gain: float, order: int = 3
) -> WignerState:
    """Apply one nonlinear gate of total ``gain`` to a squeezed thermal state.

    No Trotterization, rotation or damping: the density matrix is built in the
    position basis, multiplied by the gate phases and transformed back.
    """
    from .transforms import DENSITY_PAD, PositionDensityMatrix, density_to_wigner, nonlinear_kick

    _check_fits(grid, params)
    if int(order) != order or order < 3:
        raise ValidationError(f"order must be an integer >= 3, got {order}")
    rho = PositionDensityMatrix(grid, squeezed_thermal_density(grid.padded(DENSITY_PAD).axis, params), pad=DENSITY_PAD)
    if gain != 0:
        rho = nonlinear_kick(rho, gain, order)
    state = density_to_wigner(rho)
    return WignerState(
        grid,
        state.values / state.norm,
        f"exact_nonlinear s={params.s!r} n0={params.n0!r} gain={gain!r} order={order}",
    )


def purity(state: WignerState) -> float:
    """``Tr rho^2 = 4 pi * integral W^2`` under the unit-vacuum-variance convention."""
    return float(4 * math.pi * np.sum(state.values ** 2) * state.grid.spacing ** 2)
