import math

import numpy as np
from numpy.typing import NDArray
from scipy.special import gamma as gamma_fn

from tfac.enums import EigenvalueKind
from tfac.exceptions import InvalidParameterError
from tfac.schemas.experiments import ManufacturedCase
from tfac.schemas.grid import GridField, GridSpec
from tfac.services.frac_kernels import omega
from tfac.services.periodic_grid import laplacian_eigenvalue


def cell_integral(mu: float, start: float, end: float) -> float:
    """∫_start^end ω_μ(t) dt = ω_{μ+1}(end) − ω_{μ+1}(start)."""
    return float(omega(mu + 1.0, end) - omega(mu + 1.0, start))


def spatial_mode(spec: GridSpec) -> NDArray[np.float64]:
    """φ = sin(2πx/L)·sin(2πy/L) sampled on the grid."""
    x = np.sin(2.0 * np.pi * spec.coordinates() / spec.length)
    result: NDArray[np.float64] = np.outer(x, x)
    return result


def mode_eigenvalue(case: ManufacturedCase, spec: GridSpec) -> float:
    """λ with −Δφ = λφ: 8π²/L² for the continuous operator, the five-point value otherwise."""
    if case.eigenvalue == EigenvalueKind.DISCRETE:
        return laplacian_eigenvalue(spec)
    return 8.0 * math.pi**2 / spec.length**2


def exact_solution(case: ManufacturedCase, t: float, spec: GridSpec) -> GridField:
    return GridField(spec, float(omega(1.0 + case.sigma, t)) * spatial_mode(spec))


def manufactured_forcing_cell_average(
    case: ManufacturedCase, t_prev: float, t_now: float, spec: GridSpec
) -> GridField:
    """
    (1/τ)∫_{t_prev}^{t_now} g dt for the exterior force of the manufactured case.

    g = ω_σφ + (ε²λ − 1)ω_{σ+α}φ + [Γ(1+3σ)/Γ(1+σ)³]ω_{3σ+α}φ³, each time
    factor integrated in closed form so the t^{σ−1} singularity never gets sampled.
    """
    if not 0 <= t_prev < t_now:
        raise InvalidParameterError(f"Need 0 <= t_prev < t_now, got {t_prev}, {t_now}")
    if spec.length != case.length:
        raise InvalidParameterError(
            f"Grid length {spec.length} differs from the case length {case.length}"
        )

    sigma, alpha = case.sigma, case.alpha
    tau = t_now - t_prev
    phi = spatial_mode(spec)

    growth = cell_integral(sigma, t_prev, t_now) / tau
    linear = cell_integral(sigma + alpha, t_prev, t_now) / tau
    cubic = cell_integral(3.0 * sigma + alpha, t_prev, t_now) / tau
    cube_factor = gamma_fn(1.0 + 3.0 * sigma) / gamma_fn(1.0 + sigma) ** 3
    linear_factor = case.epsilon**2 * mode_eigenvalue(case, spec) - 1.0

    values = (growth + linear_factor * linear) * phi + cube_factor * cubic * phi**3
    return GridField(spec, values)
