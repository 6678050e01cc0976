"""Figures of merit: phase-space moments, nonlinear squeezing and negativity.

All expectations are symmetric-ordered phase-space integrals over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalInvariantError, ValidationError
from .states import WignerState

__all__ = [
    "MAX_MOMENT_ORDER",
    "DEFAULT_LAMBDA_RANGE",
    "SqueezingReport",
    "NegativityReport",
    "moment",
    "nonlinear_variance",
    "optimal_lambda",
    "squeezing_report",
    "negativity_report",
    "vacuum_threshold",
]

MAX_MOMENT_ORDER = 6
DEFAULT_LAMBDA_RANGE = (-0.12, 0.35, 200)
_SIGMA3_FLOOR = -1e-9
_DEGENERATE_VAR_X2 = 1e-12


@dataclass(frozen=True)
class SqueezingReport:
    """Sampled nonlinear variance and its closed-form optimum.

    ``vacuum_threshold_at_star`` is ``1 + 2 lambda*^2``.
    """

    lambda_samples: np.ndarray  # shape (count, 2): lambda, sigma3
    lambda_star: float
    sigma3_min: float
    vacuum_threshold_at_star: float
    beats_vacuum: bool
    beats_shot_noise: bool


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    negativity_volume: float
    cut: np.ndarray  # shape (n, 2): p, W(0, p)


def vacuum_threshold(lam):
    """Nonlinear variance of the vacuum, ``1 + 2 lambda^2``."""
    return 1.0 + 2.0 * np.asarray(lam, dtype=float) ** 2


def moment(state: WignerState, fx_power: int, fp_power: int) -> float:
    """Symmetric-ordered moment ``<x^a p^b>`` as a grid quadrature.

    Raises:
        ValidationError: for negative powers or total order above 6.
    """
    for power in (fx_power, fp_power):
        if isinstance(power, bool) or int(power) != power or power < 0:
            raise ValidationError(f"moment powers must be non-negative integers, got {power!r}")
    if fx_power + fp_power > MAX_MOMENT_ORDER:
        raise ValidationError(f"moment order {fx_power + fp_power} exceeds {MAX_MOMENT_ORDER}")
    axis = state.grid.axis
    # separable weights: contract p first, then x (numpy sums pairwise)
    row = state.values @ (axis ** int(fp_power))
    return float(np.sum(row * axis ** int(fx_power)) * state.grid.spacing ** 2)


def _moments(state: WignerState) -> dict:
    keys = [(0, 0), (0, 1), (0, 2), (2, 0), (4, 0), (2, 1)]
    m = {k: moment(state, *k) for k in keys}
    norm = m[(0, 0)]
    return {k: v / norm for k, v in m.items()}


def _quadratic(state: WignerState) -> tuple[float, float, float]:
    """Coefficients ``(var_p, cov, var_x2)`` with sigma3 = var_p - 2 lam cov + lam^2 var_x2."""
    m = _moments(state)
    var_p = m[(0, 2)] - m[(0, 1)] ** 2
    cov = m[(2, 1)] - m[(0, 1)] * m[(2, 0)]
    var_x2 = m[(4, 0)] - m[(2, 0)] ** 2
    return var_p, cov, var_x2


def _check_nonnegative(values, what="sigma3"):
    low = float(np.min(values))
    if low < _SIGMA3_FLOOR:
        raise NumericalInvariantError(f"{what} = {low:.3e} is negative; the grid state is corrupted")


def nonlinear_variance(state: WignerState, lam) -> float | np.ndarray:
    """Variance of ``p - lam x^2``; vectorized over ``lam``."""
    var_p, cov, var_x2 = _quadratic(state)
    lam_arr = np.asarray(lam, dtype=float)
    sigma3 = var_p - 2.0 * lam_arr * cov + lam_arr ** 2 * var_x2
    _check_nonnegative(sigma3)
    return float(sigma3) if sigma3.ndim == 0 else sigma3


def optimal_lambda(state: WignerState) -> tuple[float, float]:
    """Closed-form minimizer ``lambda* = Cov(p, x^2) / Var(x^2)`` and the minimum.

    Raises:
        ValidationError: if ``Var(x^2)`` is degenerate.
    """
    var_p, cov, var_x2 = _quadratic(state)
    if var_x2 <= _DEGENERATE_VAR_X2:
        raise ValidationError(f"Var(x^2) = {var_x2:.3e} is degenerate; lambda* undefined")
    lam_star = cov / var_x2
    sigma3_min = var_p - cov * cov / var_x2
    _check_nonnegative(sigma3_min)
    return float(lam_star), float(sigma3_min)


def squeezing_report(state: WignerState, lambda_range=DEFAULT_LAMBDA_RANGE) -> SqueezingReport:
    lo, hi, count = lambda_range
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValidationError(f"lambda range needs lo < hi, got ({lo}, {hi})")
    if int(count) != count or count < 2:
        raise ValidationError(f"lambda range needs count >= 2, got {count}")
    lams = np.linspace(lo, hi, int(count))
    sigma3 = nonlinear_variance(state, lams)
    lam_star, sigma3_min = optimal_lambda(state)
    threshold = float(vacuum_threshold(lam_star))
    return SqueezingReport(
        lambda_samples=np.column_stack([lams, sigma3]),
        lambda_star=lam_star,
        sigma3_min=sigma3_min,
        vacuum_threshold_at_star=threshold,
        beats_vacuum=bool(sigma3_min < threshold),
        beats_shot_noise=bool(sigma3_min < 1.0),
    )


def negativity_report(state: WignerState) -> NegativityReport:
    grid = state.grid
    values = state.values
    negative_part = 0.5 * (np.abs(values) - values)
    cut = np.column_stack([grid.axis, values[grid.center_index]])
    return NegativityReport(
        min_value=float(values.min()),
        negativity_volume=float(negative_part.sum() * grid.spacing ** 2),
        cut=cut,
    )
