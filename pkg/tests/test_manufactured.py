import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from tfac.enums import EigenvalueKind
from tfac.exceptions import InvalidParameterError
from tfac.schemas.experiments import ManufacturedCase
from tfac.schemas.grid import GridSpec
from tfac.services.frac_kernels import omega
from tfac.services.manufactured import (
    cell_integral,
    exact_solution,
    manufactured_forcing_cell_average,
    mode_eigenvalue,
    spatial_mode,
)
from tfac.services.periodic_grid import laplacian_eigenvalue


@pytest.fixture
def grid() -> GridSpec:
    return GridSpec(length=1.0, m1=16)


@pytest.fixture
def case() -> ManufacturedCase:
    return ManufacturedCase(sigma=0.4, alpha=0.6)


def test_cell_integral_from_zero():
    sigma = 0.4
    tau = 1e-3

    # σ = α: the linear factor ω_{2σ} averages to ω_{2σ+1}(τ)/τ over the first cell
    assert cell_integral(2.0 * sigma, 0.0, tau) == pytest.approx(omega(2.0 * sigma + 1.0, tau))


def test_cell_integral_of_singular_kernel_is_finite():
    assert math.isfinite(cell_integral(0.3, 0.0, 1e-8))


def test_exact_solution_starts_at_zero(case, grid):
    np.testing.assert_array_equal(exact_solution(case, 0.0, grid).values, 0.0)


def test_exact_solution_shape(case, grid):
    u = exact_solution(case, 0.5, grid)

    np.testing.assert_allclose(u.values, omega(1.4, 0.5) * spatial_mode(grid))


def test_spatial_mode_peak(grid):
    mode = spatial_mode(grid)

    assert mode[4, 4] == pytest.approx(1.0)
    assert mode[0, 3] == 0.0


def test_mode_eigenvalue_kinds(grid):
    discrete = ManufacturedCase(sigma=0.4, alpha=0.6, eigenvalue=EigenvalueKind.DISCRETE)
    continuous = ManufacturedCase(sigma=0.4, alpha=0.6, eigenvalue=EigenvalueKind.CONTINUOUS)

    assert mode_eigenvalue(discrete, grid) == laplacian_eigenvalue(grid)
    assert mode_eigenvalue(continuous, grid) == pytest.approx(8.0 * math.pi**2)


def test_forcing_average_at_one_point(case, grid):
    t_prev, t_now = 0.2, 0.3
    tau = t_now - t_prev
    g = manufactured_forcing_cell_average(case, t_prev, t_now, grid)
    phi = spatial_mode(grid)[4, 4]

    linear = case.epsilon**2 * laplacian_eigenvalue(grid) - 1.0
    cube = gamma_fn(2.2) / gamma_fn(1.4) ** 3
    expected = (
        cell_integral(0.4, t_prev, t_now)
        + linear * cell_integral(1.0, t_prev, t_now)
        + cube * cell_integral(1.8, t_prev, t_now) * phi**2
    ) * phi / tau
    assert g.values[4, 4] == pytest.approx(expected, rel=1e-12)


def test_forcing_on_first_cell_is_finite(case, grid):
    g = manufactured_forcing_cell_average(case, 0.0, 1e-6, grid)

    assert np.all(np.isfinite(g.values))


@pytest.mark.parametrize("interval", [(0.3, 0.2), (-0.1, 0.2), (0.2, 0.2)])
def test_forcing_interval_checked(case, grid, interval):
    with pytest.raises(InvalidParameterError):
        manufactured_forcing_cell_average(case, *interval, grid)


def test_forcing_grid_length_checked(case):
    with pytest.raises(InvalidParameterError):
        manufactured_forcing_cell_average(case, 0.0, 0.1, GridSpec(length=2.0, m1=8))
