import numpy as np
import pytest

from tfac.services.bulk_nonlinearity import bulk_H, bulk_H_partial_a, force_f, potential_F
from tfac.services.time_mesh import make_generator


def test_double_well_values():
    np.testing.assert_allclose(potential_F([-1.0, 0.0, 1.0]), [0.0, 0.25, 0.0])
    np.testing.assert_allclose(force_f([-1.0, 0.0, 1.0]), [0.0, 0.0, 0.0])
    assert force_f(2.0) == pytest.approx(6.0)


def test_scalar_inputs_give_floats():
    assert isinstance(bulk_H(0.5, 0.2), float)
    assert isinstance(potential_F(0.5), float)


def test_coercivity_identity():
    a, b = make_generator(7).uniform(-2.0, 2.0, size=(2, 1000))
    lhs = (a - b) * bulk_H(a, b)
    rhs = potential_F(a) - potential_F(b) + (a - b) ** 4 / 12.0

    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_diagonal_reduces_to_force():
    a = np.linspace(-1.5, 1.5, 11)

    np.testing.assert_allclose(bulk_H(a, a), force_f(a), atol=1e-13)


def test_partial_derivative_matches_difference_quotient():
    a, b = make_generator(3).uniform(-1.0, 1.0, size=(2, 50))
    step = 1e-6
    quotient = (bulk_H(a + step, b) - bulk_H(a - step, b)) / (2.0 * step)

    np.testing.assert_allclose(bulk_H_partial_a(a, b), quotient, atol=1e-6)


def test_midpoint_approximation_is_second_order():
    t = 1.0
    steps = np.array([0.02, 0.01, 0.005])
    errors = np.abs(
        bulk_H(np.sin(t + steps / 2), np.sin(t - steps / 2)) - force_f(np.sin(t))
    )
    orders = np.log(errors[:-1] / errors[1:]) / np.log(2.0)

    np.testing.assert_allclose(orders, 2.0, atol=0.05)
