import math

import pytest

from tfac.exceptions import ConfigurationError, InvalidParameterError
from tfac.schemas.grid import GridSpec
from tfac.schemas.solver import SolveRecord
from tfac.services.diagnostics import (
    check_dissipation,
    convergence_orders,
    fit_loglog_slope,
    restricted_step,
    restriction_bound,
    solvability_threshold,
)


COARSEN_GRID = GridSpec(length=2.0 * math.pi, m1=128)


def record(n: int, t: float, energy_alpha: float | None, v_norm2: float = 0.0) -> SolveRecord:
    return SolveRecord(
        n=n,
        t=t,
        tau=t,
        energy=1.0,
        energy_alpha=energy_alpha,
        max_norm=0.5,
        v_norm2=v_norm2,
    )


def test_solvability_threshold():
    assert solvability_threshold(0.5) == pytest.approx(math.pi)
    assert solvability_threshold(0.999) == pytest.approx(2.0, rel=1e-2)


@pytest.mark.parametrize("alpha, expected, spread", [(0.7, 0.14, 0.01), (0.9, 0.36, 0.02)])
def test_restriction_bound_on_coarsening_grid(alpha, expected, spread):
    bound = restriction_bound(alpha, 1.0, COARSEN_GRID.h, 0.05)

    assert abs(bound - expected) <= spread


def test_restriction_bound_shrinks_with_ratio():
    assert restriction_bound(0.7, 4.0, 0.1, 0.05) < restriction_bound(0.7, 1.0, 0.1, 0.05)
    with pytest.raises(InvalidParameterError):
        restriction_bound(0.7, 0.0, 0.1, 0.05)


def test_restricted_step_keeps_admissible_candidate():
    assert restricted_step(1e-3, 1e-3, 0.7, COARSEN_GRID, 0.05) == 1e-3


def test_restricted_step_clips_to_bound():
    grid = GridSpec(length=2.0 * math.pi, m1=8)
    tau = restricted_step(1.0, 0.1, 0.7, grid, 0.05)
    bound = restriction_bound(0.7, tau / 0.1, grid.h, 0.05)

    assert tau <= bound
    assert bound - tau <= 1e-9
    with pytest.raises(InvalidParameterError):
        restricted_step(1.0, 0.0, 0.7, grid, 0.05)


def test_dissipation_check():
    records = [record(0, 0.0, 2.0), record(1, 0.1, 1.5, 0.1), record(2, 0.2, 1.6, 0.0)]

    assert check_dissipation(records, 0.5) == [True, False]


def test_dissipation_check_counts_the_dissipated_term():
    # ½(ω_{1.5}(0.1) − ω_{1.5}(0))·‖v‖² ≈ 0.18 exceeds the drop of 0.1
    records = [record(0, 0.0, 2.0), record(1, 0.1, 1.9, 1.0)]

    assert check_dissipation(records, 0.5) == [False]


def test_dissipation_check_skips_forced_runs():
    assert check_dissipation([record(0, 0.0, None)], 0.5, forced=True) == []


def test_dissipation_check_needs_energy():
    with pytest.raises(ConfigurationError):
        check_dissipation([record(0, 0.0, 1.0), record(1, 0.1, None)], 0.5)


def test_loglog_slope():
    x = [1e-4, 1e-3, 1e-2, 1e-1]
    y = [3.0 * value**-0.3 for value in x]

    assert fit_loglog_slope(x, y) == pytest.approx(-0.3)
    assert math.isnan(fit_loglog_slope([1.0], [1.0]))


def test_convergence_orders():
    orders = convergence_orders([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 0.0])

    assert orders[0] is None
    assert orders[1] == pytest.approx(2.0)
    assert orders[2] is None
