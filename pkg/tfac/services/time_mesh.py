import logging
import math

import numpy as np

from tfac.exceptions import InvalidParameterError
from tfac.schemas.mesh import AdaptiveController, TimeMesh


logger = logging.getLogger(__name__)

# Tolerance for treating (T - T0)/τ as an exact integer
_TAIL_COUNT_SLACK = 1e-9


def make_generator(seed: int) -> np.random.Generator:
    """Seeded Philox (64-bit counter-based) generator used for every random draw."""
    return np.random.Generator(np.random.Philox(seed))


def build_graded(T0: float, N0: int, gamma: float) -> TimeMesh:
    """
    Graded mesh t_k = T0·(k/N0)^γ on [0, T0].

    Raises:
        InvalidParameterError: If T0 <= 0, N0 < 1 or γ < 1
    """
    if not T0 > 0:
        raise InvalidParameterError(f"T0 must be positive, got {T0}")
    if N0 < 1:
        raise InvalidParameterError(f"N0 must be at least 1, got {N0}")
    if gamma < 1:
        raise InvalidParameterError(f"Grading parameter must be >= 1, got {gamma}")

    k = np.arange(N0 + 1, dtype=np.float64)
    points = T0 * (k / N0) ** gamma
    points[-1] = T0

    return TimeMesh(points)


def build_uniform(T: float, tau: float) -> TimeMesh:
    """Steps of ``tau`` from 0 to T; the last step is shortened to land on T."""
    if not tau > 0 or not T > 0:
        raise InvalidParameterError(f"Need positive T and tau, got {T}, {tau}")

    ratio = T / tau
    count = max(1, math.ceil(ratio - _TAIL_COUNT_SLACK * ratio))
    points = np.append(tau * np.arange(count, dtype=np.float64), T)

    return TimeMesh(points)


def build_graded_uniform(
    T0: float, N0: int, gamma: float, T: float, tau_tail: float
) -> TimeMesh:
    """Graded cell on [0, T0], then uniform steps of ``tau_tail``; only the last step is shortened."""
    if not tau_tail > 0:
        raise InvalidParameterError(f"Tail step must be positive, got {tau_tail}")
    if not T > T0:
        raise InvalidParameterError(f"Horizon T={T} must exceed T0={T0}")

    graded = build_graded(T0, N0, gamma)

    ratio = (T - T0) / tau_tail
    count = max(1, math.ceil(ratio - _TAIL_COUNT_SLACK * ratio))
    tail = T0 + tau_tail * np.arange(1, count, dtype=np.float64)
    points = np.concatenate((graded.points, tail, [T]))

    return TimeMesh(points)


def random_tail_start(gamma: float, T: float, N_total: int) -> tuple[float, int]:
    """Graded-cell end T0 = min(1/γ, T) and size N0 = ⌈N/(T + 1 − 1/γ)⌉."""
    T0 = min(1.0 / gamma, T)
    N0 = math.ceil(N_total / (T + 1.0 - 1.0 / gamma))
    return T0, N0


def build_graded_random(
    gamma: float,
    T: float,
    N_total: int,
    seed: int,
    T0: float | None = None,
    N0: int | None = None,
) -> TimeMesh:
    """
    Graded cell followed by randomly sized steps filling (T0, T].

    Tail steps are τ_{N0+k} = (T − T0)·ε_k/Σε, with ε_k drawn from
    ``make_generator(seed)`` on (0, 1]. T0 and N0 default to the values of
    ``random_tail_start``.

    T0 and N0 come last as optional overrides rather than first, since both are
    normally derived from γ, T and N_total.

    Args:
        gamma: Grading parameter of the initial cell
        T: Final time
        N_total: Total number of steps
        seed: Generator seed
        T0: Optional override of the graded-cell end
        N0: Optional override of the graded-cell size

    Returns:
        TimeMesh with N_total steps (N0 when T0 == T)

    Raises:
        InvalidParameterError: If N_total <= N0 while the tail is non-empty
    """
    default_T0, default_N0 = random_tail_start(gamma, T, N_total)
    T0 = default_T0 if T0 is None else T0
    N0 = default_N0 if N0 is None else N0

    if T0 > T:
        raise InvalidParameterError(f"T0={T0} exceeds horizon T={T}")

    graded = build_graded(T0, N0, gamma)
    if T0 == T:
        return graded

    if N_total <= N0:
        raise InvalidParameterError(
            f"N_total={N_total} leaves no tail steps after N0={N0}"
        )

    logger.debug(
        "Graded-random mesh: T0=%g N0=%d tail=%d seed=%d", T0, N0, N_total - N0, seed
    )
    draws = 1.0 - make_generator(seed).random(N_total - N0)
    steps = (T - T0) * draws / draws.sum()

    tail = T0 + np.cumsum(steps)
    tail[-1] = T
    points = np.concatenate((graded.points, tail))

    return TimeMesh(points)


def adaptive_next_step(ctrl: AdaptiveController, dEa_dt: float) -> float:
    """τ = max{τ_min, τ_max/√(1 + κ·E_α′²)}."""
    return max(ctrl.tau_min, ctrl.tau_max / math.sqrt(1.0 + ctrl.kappa * dEa_dt**2))
