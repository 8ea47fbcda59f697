"""Double-well bulk terms; every function maps elementwise over scalars or arrays."""

from typing import Any

from numpy.typing import ArrayLike
import numpy as np


def potential_F(u: ArrayLike) -> Any:
    u = np.asarray(u, dtype=np.float64)
    return (0.25 * (1.0 - u**2) ** 2)[()]


def force_f(u: ArrayLike) -> Any:
    u = np.asarray(u, dtype=np.float64)
    return (u**3 - u)[()]


def bulk_H(a: ArrayLike, b: ArrayLike) -> Any:
    """
    Two-point approximation of f at the midpoint.

    H(a, b) = a³/3 + ab²/2 + b³/6 − (a + b)/2, satisfying
    H(a, b)(a − b) = F(a) − F(b) + (a − b)⁴/12 and H(a, a) = f(a).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (a**3 / 3.0 + 0.5 * a * b**2 + b**3 / 6.0 - 0.5 * (a + b))[()]


def bulk_H_partial_a(a: ArrayLike, b: ArrayLike) -> Any:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (a**2 + 0.5 * (b**2 - 1.0))[()]
