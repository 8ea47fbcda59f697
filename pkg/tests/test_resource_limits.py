import math
import pickle

import pytest

from tfac.exceptions import InvalidParameterError, NewtonDivergenceError
from tfac.services.resource_limits import run_sweep, run_with_limits
from tfac.services.time_mesh import build_graded


def test_inline_sweep_keeps_order():
    assert run_sweep(pow, [(2, 3), (3, 2), (5, 0)], workers=1) == [8, 9, 1]


def test_run_with_limits_returns_result():
    assert run_with_limits(math.factorial, 5, timeout=30) == 120


def test_solver_errors_cross_the_process_boundary():
    with pytest.raises(InvalidParameterError):
        run_with_limits(build_graded, 1.0, 0, 2.0, timeout=30)


def test_process_sweep_keeps_order():
    assert run_sweep(math.factorial, [(4,), (3,)], workers=2) == [24, 6]


def test_newton_error_pickles():
    error = pickle.loads(pickle.dumps(NewtonDivergenceError(7, 1e-3, 50)))

    assert (error.step, error.residual, error.iterations) == (7, 1e-3, 50)
    assert "step 7" in str(error)
