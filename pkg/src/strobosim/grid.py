"""Uniform square phase-space grid shared by every representation.

The axis is the half-open interval ``[-L, L)`` sampled at ``n_points`` points,
so the origin falls exactly on sample ``n_points // 2`` and the grid is
periodic-consistent for FFT-based transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError

__all__ = ["GridSpec", "make_grid", "coordinate_axis", "DEFAULT_N_POINTS", "DEFAULT_HALF_EXTENT"]

DEFAULT_N_POINTS = 512
DEFAULT_HALF_EXTENT = 13.0


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Square grid geometry.

    Attributes:
        n_points: samples per axis, a power of two.
        half_extent: ``L``; the axis spans ``[-L, L)``.
    """

    n_points: int
    half_extent: float

    def __post_init__(self):
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points:
            raise ValidationError(f"n_points must be an integer, got {self.n_points!r}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "half_extent", float(self.half_extent))
        if not _is_power_of_two(self.n_points):
            raise ValidationError(f"n_points must be a power of two, got {self.n_points}")
        if not (math.isfinite(self.half_extent) and self.half_extent > 0):
            raise ValidationError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.n_points

    @property
    def conjugate_half_extent(self) -> float:
        """Half-width ``pi / spacing`` of the frequency grid conjugate to the axis."""
        return math.pi / self.spacing

    @property
    def center_index(self) -> int:
        return self.n_points // 2

    @cached_property
    def axis(self) -> np.ndarray:
        return coordinate_axis(self)

    def padded(self, factor: int) -> "GridSpec":
        """Same spacing, ``factor`` times the extent (used for density matrices)."""
        return GridSpec(self.n_points * factor, self.half_extent * factor)

    def to_dict(self) -> dict:
        return {"n_points": self.n_points, "half_extent": self.half_extent}


def make_grid(n_points: int = DEFAULT_N_POINTS, half_extent: float = DEFAULT_HALF_EXTENT) -> GridSpec:
    """Build and validate a grid.

    Raises:
        ValidationError: if ``n_points`` is not a power of two of at least 64, or if
            the conjugate grid ``pi / spacing`` does not cover ``half_extent``
            (Wigner <-> density-matrix transforms would alias).
    """
    grid = GridSpec(n_points, half_extent)
    if grid.n_points < 64:
        raise ValidationError(f"n_points must be >= 64, got {grid.n_points}")
    if grid.conjugate_half_extent < grid.half_extent:
        raise ValidationError(
            f"grid aliases: pi/spacing = {grid.conjugate_half_extent:.6g} < half_extent = "
            f"{grid.half_extent:.6g}; use more points or a smaller extent"
        )
    return grid


def coordinate_axis(grid: GridSpec) -> np.ndarray:
    # integer multiples of the spacing so that axis[n/2] == 0 exactly
    index = np.arange(grid.n_points) - grid.center_index
    axis = index * grid.spacing
    axis.setflags(write=False)
    return axis
