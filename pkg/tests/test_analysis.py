import functools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import FIG2_VAR_P, FIG2_VAR_X, gaussian_sigma3
from strobosim.analysis import (
    moment,
    negativity_report,
    nonlinear_variance,
    optimal_lambda,
    squeezing_report,
    vacuum_threshold,
)
from strobosim.errors import NumericalInvariantError, ValidationError
from strobosim.grid import make_grid
from strobosim.states import (
    SqueezedThermalParams,
    WignerState,
    exact_nonlinear_gaussian,
    ideal_cubic_wigner,
    squeezed_thermal,
    vacuum,
)

FIG2 = SqueezedThermalParams(0.05, 1.6)


@pytest.fixture(scope="module")
def cubic_fig2(grid):
    return exact_nonlinear_gaussian(grid, FIG2, 0.05)


@pytest.fixture(scope="module")
def cubic_vacuum(grid):
    return exact_nonlinear_gaussian(grid, SqueezedThermalParams(), 0.05)


def direct_sigma3(state, lam):
    x = state.grid.axis[:, None]
    p = state.grid.axis[None, :]
    q = p - lam * x ** 2
    w = state.values * state.grid.spacing ** 2
    mean = np.sum(q * w)
    return float(np.sum((q - mean) ** 2 * w))


def test_moment_examples(grid):
    vac = vacuum(grid)
    assert moment(vac, 0, 0) == pytest.approx(1.0, abs=1e-12)
    assert moment(vac, 2, 0) == pytest.approx(1.0, abs=1e-10)
    assert moment(vac, 0, 2) == pytest.approx(1.0, abs=1e-10)
    assert moment(vac, 4, 0) == pytest.approx(3.0, abs=1e-9)
    assert moment(squeezed_thermal(grid, FIG2), 2, 0) == pytest.approx(FIG2_VAR_X, abs=1e-6)


@pytest.mark.parametrize("a, b", [(7, 0), (3, 4), (-1, 2), (1.5, 0)])
def test_moment_order_validated(grid, a, b):
    with pytest.raises(ValidationError):
        moment(vacuum(grid), a, b)


@pytest.mark.parametrize("lam", [-0.1, 0.0, 0.1, 0.3])
def test_vacuum_law(grid, lam):
    assert nonlinear_variance(vacuum(grid), lam) == pytest.approx(1 + 2 * lam ** 2, abs=1e-9)


def test_vectorized_variance(grid):
    lams = np.linspace(-0.5, 0.5, 11)
    np.testing.assert_allclose(nonlinear_variance(vacuum(grid), lams), vacuum_threshold(lams), atol=1e-9)


@functools.cache
def _shared_cubic():
    return exact_nonlinear_gaussian(make_grid(), FIG2, 0.05)


@given(st.lists(st.floats(-1.0, 1.0), min_size=20, max_size=20))
def test_two_computation_paths_agree(lams):
    state = _shared_cubic()
    for lam in lams:
        assert nonlinear_variance(state, lam) == pytest.approx(direct_sigma3(state, lam), abs=1e-10)


def test_optimum_vacuum(grid):
    lam, sigma3 = optimal_lambda(vacuum(grid))
    assert lam == pytest.approx(0.0, abs=1e-12)
    assert sigma3 == pytest.approx(1.0, abs=1e-10)


def test_optimum_cubic_from_vacuum(cubic_vacuum):
    lam, sigma3 = optimal_lambda(cubic_vacuum)
    assert lam == pytest.approx(0.15, abs=1e-3)
    assert sigma3 == pytest.approx(1.0, abs=2e-3)


def test_optimum_cubic_from_fig2_state(cubic_fig2):
    lam, sigma3 = optimal_lambda(cubic_fig2)
    assert lam == pytest.approx(0.15, abs=1e-6)
    assert sigma3 == pytest.approx(FIG2_VAR_P, abs=1e-6)
    lams = np.linspace(-0.12, 0.35, 50)
    np.testing.assert_allclose(nonlinear_variance(cubic_fig2, lams), gaussian_sigma3(lams, 1.6, 0.05, 0.05), rtol=1e-4)


def test_optimum_matches_parabola_fit(cubic_fig2):
    lams = np.array([-0.1, 0.1, 0.3])
    values = nonlinear_variance(cubic_fig2, lams)
    a, b, c = np.polyfit(lams, values, 2)
    lam, sigma3 = optimal_lambda(cubic_fig2)
    assert -b / (2 * a) == pytest.approx(lam, abs=1e-9)
    assert c - b * b / (4 * a) == pytest.approx(sigma3, abs=1e-9)


def test_degenerate_position_spread(grid):
    values = np.zeros((grid.n_points, grid.n_points))
    values[grid.center_index] = np.exp(-grid.axis ** 2 / 2) / (math.sqrt(2 * math.pi) * grid.spacing)
    with pytest.raises(ValidationError, match="degenerate"):
        optimal_lambda(WignerState(grid, values))


def test_negative_variance_is_an_error(grid):
    # weights 2 at p = 0 and -1 at p = d on one x-column: Var p < 0
    values = np.zeros((grid.n_points, grid.n_points))
    c = grid.center_index
    values[c + 10, c] = 2.0
    values[c + 10, c + 1] = -1.0
    state = WignerState(grid, values / grid.spacing ** 2)
    with pytest.raises(NumericalInvariantError):
        nonlinear_variance(state, 0.0)


def test_report_vacuum(grid):
    report = squeezing_report(vacuum(grid), (-0.12, 0.35, 100))
    assert report.lambda_samples.shape == (100, 2)
    assert not report.beats_vacuum
    assert not report.beats_shot_noise
    assert report.vacuum_threshold_at_star == pytest.approx(1.0, abs=1e-12)


def test_report_cubic(cubic_fig2):
    report = squeezing_report(cubic_fig2)
    assert report.lambda_samples.shape == (200, 2)
    assert report.beats_shot_noise
    assert report.beats_vacuum
    assert report.vacuum_threshold_at_star == pytest.approx(1 + 2 * report.lambda_star ** 2)


@pytest.mark.parametrize("bad", [(0.3, 0.1, 10), (0.0, 1.0, 1), (0.0, math.nan, 5)])
def test_report_range_validated(grid, bad):
    with pytest.raises(ValidationError):
        squeezing_report(vacuum(grid), bad)


@given(st.floats(0.6, 1.6), st.floats(0.0, 0.3))
def test_gaussians_have_no_negativity(s, n0):
    report = negativity_report(squeezed_thermal(make_grid(), SqueezedThermalParams(n0, s)))
    assert report.min_value > 0
    assert report.negativity_volume == pytest.approx(0.0, abs=1e-9)


def test_negativity_of_airy_reference(grid):
    report = negativity_report(ideal_cubic_wigner(grid, 0.05))
    assert report.min_value < 0
    assert report.negativity_volume > 0


def test_cut_is_the_x0_column(cubic_vacuum):
    report = negativity_report(cubic_vacuum)
    grid = cubic_vacuum.grid
    np.testing.assert_array_equal(report.cut[:, 0], grid.axis)
    np.testing.assert_array_equal(report.cut[:, 1], cubic_vacuum.values[grid.center_index])
    assert report.cut[:, 1].min() < 0
