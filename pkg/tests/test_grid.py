import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strobosim.errors import ValidationError
from strobosim.grid import GridSpec, make_grid


def test_defaults():
    grid = make_grid()
    assert grid.n_points == 512
    assert grid.half_extent == 13.0
    assert grid.spacing == pytest.approx(26.0 / 512)


@pytest.mark.parametrize("n", [0, 100, 513, -64])
def test_rejects_non_power_of_two(n):
    with pytest.raises(ValidationError):
        make_grid(n, 5.0)


def test_rejects_too_few_points():
    with pytest.raises(ValidationError, match=">= 64"):
        make_grid(32, 5.0)


def test_rejects_aliasing_extent():
    # pi / spacing = pi * 64 / 40 < 20
    with pytest.raises(ValidationError, match="aliases"):
        make_grid(64, 20.0)


@pytest.mark.parametrize("extent", [0.0, -1.0, math.inf, math.nan])
def test_rejects_bad_extent(extent):
    with pytest.raises(ValidationError):
        GridSpec(64, extent)


@given(st.integers(6, 11), st.floats(1.0, 20.0))
def test_axis_layout(log_n, extent):
    grid = GridSpec(2 ** log_n, extent)
    axis = grid.axis
    assert axis.shape == (grid.n_points,)
    assert axis[grid.center_index] == 0.0
    assert axis[0] == pytest.approx(-extent)
    assert axis[-1] == pytest.approx(extent - grid.spacing)
    np.testing.assert_allclose(np.diff(axis), grid.spacing, rtol=1e-12)
    assert not axis.flags.writeable


def test_padded_keeps_spacing():
    grid = make_grid(256, 8.0)
    padded = grid.padded(2)
    assert padded.spacing == grid.spacing
    assert padded.n_points == 512
    np.testing.assert_array_equal(padded.axis[128:384], grid.axis)


def test_hashable_value_semantics():
    assert make_grid(256, 8.0) == GridSpec(256, 8)
    assert len({make_grid(256, 8.0), GridSpec(256, 8)}) == 1
