import logging
import math
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from tfac.constants import DISSIPATION_TOL
from tfac.exceptions import ConfigurationError, InvalidParameterError, LengthMismatchError
from tfac.schemas.grid import GridSpec
from tfac.schemas.mesh import TimeMesh
from tfac.schemas.solver import SolveRecord
from tfac.services.bulk_nonlinearity import bulk_H
from tfac.services.frac_kernels import KernelTable, doc_caputo_derivative, omega
from tfac.services.periodic_grid import five_point_laplacian

if TYPE_CHECKING:
    from tfac.services.stepper import SolverState


logger = logging.getLogger(__name__)


def solvability_threshold(alpha: float) -> float:
    """Steps τ < (2Γ(1+α))^{1/α} keep a^{(n)}_0 < 2, i.e. the per-step problem uniquely solvable."""
    return float((2.0 * gamma_fn(1.0 + alpha)) ** (1.0 / alpha))


def restriction_bound(alpha: float, ratio: float, h: float, epsilon: float) -> float:
    """[min(1/2, h²/(2ε²))·αΓ(1+α)/(1+r)^{1−α}]^{1/α}."""
    if not ratio > 0:
        raise InvalidParameterError(f"Step ratio must be positive, got {ratio}")

    factor = min(0.5, h**2 / (2.0 * epsilon**2))
    base = factor * alpha * gamma_fn(1.0 + alpha) / (1.0 + ratio) ** (1.0 - alpha)
    return float(base ** (1.0 / alpha))


def max_bound_restriction(
    mesh: TimeMesh, n: int, alpha: float, grid: GridSpec, epsilon: float
) -> float:
    """Largest τ_n keeping the discrete maximum principle at step n (r_1 = 1)."""
    return restriction_bound(alpha, mesh.ratio(n), grid.h, epsilon)


def restricted_step(
    candidate: float, tau_prev: float, alpha: float, grid: GridSpec, epsilon: float
) -> float:
    """
    Largest τ <= candidate with τ <= restriction_bound(τ/τ_prev).

    The bound shrinks as τ grows, so τ − bound(τ/τ_prev) is increasing and has one root.
    """
    if not tau_prev > 0:
        raise InvalidParameterError(f"Previous step must be positive, got {tau_prev}")

    def excess(tau: float) -> float:
        return tau - restriction_bound(alpha, tau / tau_prev, grid.h, epsilon)

    if excess(candidate) <= 0:
        return candidate

    root = brentq(excess, candidate * 1e-12, candidate, xtol=1e-15, rtol=1e-12)
    clipped = float(root) * (1.0 - 1e-12)
    logger.debug("Step %.4g clipped to %.4g by the max-bound restriction", candidate, clipped)
    return clipped


def check_dissipation(
    records: Sequence[SolveRecord], alpha: float, forced: bool = False
) -> list[bool]:
    """
    Per-step verdicts of the variational energy law.

    Step n passes when
    (E_α^n − E_α^{n−1}) + ½(ω_{1+α}(t_n) − ω_{1+α}(t_{n−1}))·‖v^{n−1/2}‖²_h
    <= DISSIPATION_TOL·(1 + |E_α^{n−1}|), i.e. the law multiplied by τ_n.
    Forced runs carry no such law and yield an empty list.

    The weight ω_{1+α}(t_n) − ω_{1+α}(t_{n−1}) equals the a-row sum, so only α and the
    record times are needed, not a kernel table and mesh. That lets fast-mode runs,
    which build no table, be checked as well.
    """
    if forced:
        logger.info("Dissipation check skipped for a forced run")
        return []

    verdicts = []
    for previous, current in zip(records, records[1:]):
        if previous.energy_alpha is None or current.energy_alpha is None:
            raise ConfigurationError("Dissipation check needs the variational energy monitor")

        weight = float(omega(1.0 + alpha, current.t) - omega(1.0 + alpha, previous.t))
        change = current.energy_alpha - previous.energy_alpha
        lhs = change + 0.5 * weight * current.v_norm2
        passed = lhs <= DISSIPATION_TOL * (1.0 + abs(previous.energy_alpha))
        if not passed:
            logger.warning("Energy law violated at step %d by %.3e", current.n, lhs)
        verdicts.append(passed)

    return verdicts


def caputo_form_residual(state: "SolverState", table: KernelTable, n: int) -> float:
    """
    Max-norm gap between Σ_j θ^{(n)}_{n−j}(u^j − u^{j−1} − τ_jḡ^j) and v^{n−1/2},
    divided by Σ_j θ^{(n)}_{n−j}.
    """
    if state.u_history is None or state.forcing_increments is None:
        raise ConfigurationError("Caputo-form residual needs the retained u-history")
    if len(state.u_history) < n + 1:
        raise LengthMismatchError(
            f"u-history holds {len(state.u_history)} levels, step {n} needs {n + 1}"
        )

    history = np.asarray(state.u_history[: n + 1])
    forcing = np.asarray(state.forcing_increments[:n])
    theta = table.theta_row(n)
    lhs = doc_caputo_derivative(history, table, n) - np.tensordot(theta, forcing, axes=1)

    u_now, u_prev = history[n], history[n - 1]
    config = state.config
    v_mid = config.epsilon**2 * five_point_laplacian(
        0.5 * (u_now + u_prev), config.grid.h
    ) - bulk_H(u_now, u_prev)

    return float(np.max(np.abs(lhs - v_mid)) / theta.sum())


def fit_loglog_slope(x: ArrayLike, y: ArrayLike) -> float:
    """Least-squares slope of log|y| against log x; NaN when fewer than two usable points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.abs(np.asarray(y, dtype=np.float64))
    usable = (x > 0) & (y > 0) & np.isfinite(y)
    if usable.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)
    return float(slope)


def convergence_orders(steps: ArrayLike, errors: ArrayLike) -> list[float | None]:
    """Observed orders log(e_{k−1}/e_k)/log(τ_{k−1}/τ_k); the first entry is None."""
    steps = np.asarray(steps, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    orders: list[float | None] = [None]
    for k in range(1, steps.size):
        if errors[k] > 0 and errors[k - 1] > 0 and steps[k] != steps[k - 1]:
            orders.append(
                float(math.log(errors[k - 1] / errors[k]) / math.log(steps[k - 1] / steps[k]))
            )
        else:
            orders.append(None)
    return orders
