import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from cachetools import LRUCache, cached
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc, roots_jacobi

from tfac.constants import SOE_MIN_ORDER, SOE_ORDER_STEP, SOE_TAIL_HEADROOM
from tfac.exceptions import InvalidParameterError, SoeConstructionError
from tfac.services.frac_kernels import omega
from tfac.settings import settings


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SoeApprox:
    """ω_α(t) ≈ Σ_ℓ ϖ^ℓ·exp(−θ^ℓ t) on [Δt, T], with a sampled error certificate."""

    alpha: float
    tol: float
    cutoff: float
    horizon: float
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    max_error: float = field(default=0.0)

    @property
    def num_nodes(self) -> int:
        return self.nodes.size


def _band_order(tol: float, refinement: int) -> int:
    return max(SOE_MIN_ORDER, math.ceil(0.5 * math.log(1.0 / tol))) + (
        SOE_ORDER_STEP * refinement
    )


def _tail_exponent(alpha: float, tol: float, cutoff: float) -> int:
    """Smallest J with Q(1−α, Δt·2^J) <= tol/headroom, i.e. the truncated tail is relatively negligible at Δt."""
    target = tol / (2.0 * SOE_TAIL_HEADROOM)
    exponent = math.ceil(math.log2(1.0 / cutoff))
    while gammaincc(1.0 - alpha, cutoff * 2.0**exponent) > target:
        exponent += 1
    return exponent


def _quadrature(
    alpha: float, horizon: float, top_exponent: int, order: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Nodes and weights of ∫_0^{2^J} e^{−ts}s^{−α}ds·sin(πα)/π.

    The band [0, 2^{j0}] (2^{j0} <= 1/T) uses Gauss–Jacobi to absorb s^{−α};
    every dyadic band [2^j, 2^{j+1}] above it uses Gauss–Legendre.
    """
    scale = 1.0 / (gamma_fn(alpha) * gamma_fn(1.0 - alpha))
    bottom_exponent = math.floor(math.log2(1.0 / horizon))
    bottom = 2.0**bottom_exponent

    jacobi_x, jacobi_w = roots_jacobi(order, 0.0, -alpha)
    nodes = [0.5 * bottom * (1.0 + jacobi_x)]
    weights = [scale * bottom ** (1.0 - alpha) * 2.0 ** (alpha - 1.0) * jacobi_w]

    legendre_x, legendre_w = leggauss(order)
    for exponent in range(bottom_exponent, top_exponent):
        lower = 2.0**exponent
        band_nodes = lower + 0.5 * lower * (1.0 + legendre_x)
        nodes.append(band_nodes)
        weights.append(scale * 0.5 * lower * legendre_w * band_nodes ** (-alpha))

    return np.concatenate(nodes), np.concatenate(weights)


def certification_grid(cutoff: float, horizon: float, samples: int) -> NDArray[np.float64]:
    """``samples`` log-spaced points of [Δt, T], endpoints included."""
    return np.logspace(math.log10(cutoff), math.log10(horizon), samples)


def soe_error(
    alpha: float,
    nodes: NDArray[np.float64],
    weights: NDArray[np.float64],
    t: NDArray[np.float64],
) -> NDArray[np.float64]:
    """|ω_α(t) − Σϖe^{−θt}| / max(1, ω_α(t))."""
    exact = omega(alpha, t)
    approx = np.exp(-np.outer(t, nodes)) @ weights
    result: NDArray[np.float64] = np.abs(exact - approx) / np.maximum(1.0, exact)
    return result


@cached(LRUCache(maxsize=16))
def build_soe(
    alpha: float,
    tol: float = settings.SOE_TOL,
    cutoff: float = settings.SOE_CUTOFF,
    horizon: float = 1.0,
    samples: int = settings.SOE_SAMPLES,
) -> SoeApprox:
    """
    Build and certify an SOE approximation of ω_α on [cutoff, horizon].

    The error is measured relative to max(1, ω_α(t)), i.e. absolute wherever
    ω_α <= 1. Each refinement raises the per-band order and adds one dyadic band.

    Args:
        alpha: Fractional order in (0, 1)
        tol: Certified uniform error
        cutoff: Smallest certified time Δt
        horizon: Largest certified time T
        samples: Number of log-spaced certification points

    Returns:
        Certified SoeApprox (cached per argument tuple)

    Raises:
        InvalidParameterError: If a parameter is out of range
        SoeConstructionError: If certification fails after the refinement cap
    """
    if not 0 < alpha < 1:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < cutoff < horizon:
        raise InvalidParameterError(f"Need 0 < cutoff < horizon, got {cutoff}, {horizon}")
    if not 0 < tol < 1:
        raise InvalidParameterError(f"SOE tolerance must lie in (0, 1), got {tol}")

    grid = certification_grid(cutoff, horizon, samples)
    top_exponent = _tail_exponent(alpha, tol, cutoff)
    max_error = math.inf

    for refinement in range(settings.SOE_MAX_REFINEMENTS + 1):
        order = _band_order(tol, refinement)
        nodes, weights = _quadrature(alpha, horizon, top_exponent + refinement, order)
        max_error = float(soe_error(alpha, nodes, weights, grid).max())

        logger.debug(
            "SOE attempt %d: alpha=%g order=%d nodes=%d error=%.3e",
            refinement,
            alpha,
            order,
            nodes.size,
            max_error,
        )

        if max_error <= tol:
            nodes.setflags(write=False)
            weights.setflags(write=False)
            logger.info(
                "SOE certified: alpha=%g nodes=%d error=%.3e on [%g, %g]",
                alpha,
                nodes.size,
                max_error,
                cutoff,
                horizon,
            )
            return SoeApprox(
                alpha=alpha,
                tol=tol,
                cutoff=cutoff,
                horizon=horizon,
                nodes=nodes,
                weights=weights,
                max_error=max_error,
            )

    raise SoeConstructionError(
        f"SOE for alpha={alpha} not certified to {tol:.1e} "
        f"(best sampled error {max_error:.3e})"
    )


def eval_soe(soe: SoeApprox, t: ArrayLike) -> Any:
    """Σ_ℓ ϖ^ℓ e^{−θ^ℓ t}; certified only for t in [Δt, T]."""
    t = np.asarray(t, dtype=np.float64)
    return (np.exp(-np.multiply.outer(t, soe.nodes)) @ soe.weights)[()]


def _decay(nodes: NDArray[np.float64], tau: float) -> NDArray[np.float64]:
    result: NDArray[np.float64] = np.exp(-nodes * tau)
    return result


def _cell_integral(nodes: NDArray[np.float64], tau: float) -> NDArray[np.float64]:
    """∫_0^τ e^{−θs} ds = (1 − e^{−θτ})/θ."""
    result: NDArray[np.float64] = -np.expm1(-nodes * tau) / nodes
    return result


def _per_mode(coefficients: NDArray[np.float64], ndim: int) -> NDArray[np.float64]:
    return coefficients.reshape(coefficients.shape + (1,) * ndim)


def history_update(
    history: NDArray[np.float64],
    v_mid: ArrayLike,
    tau: float,
    nodes: NDArray[np.float64],
) -> NDArray[np.float64]:
    """H^ℓ(t_k) = e^{−θ^ℓτ_k}H^ℓ(t_{k−1}) + v^{k−1/2}(1 − e^{−θ^ℓτ_k})/θ^ℓ; mode axis first."""
    v_mid = np.asarray(v_mid, dtype=np.float64)
    return (
        _per_mode(_decay(nodes, tau), v_mid.ndim) * history
        + _per_mode(_cell_integral(nodes, tau), v_mid.ndim) * v_mid
    )


def fast_l1r_derivative(
    a0_over_tau: float,
    v_now: ArrayLike,
    history: NDArray[np.float64],
    soe: SoeApprox,
    tau_n: float,
) -> Any:
    """(a^{(n)}_0/τ_n)v^{n−1/2} − (1/τ_n)Σ_ℓ ϖ^ℓ(1 − e^{−θ^ℓτ_n})H^ℓ(t_{n−1})."""
    v_now = np.asarray(v_now, dtype=np.float64)
    return (a0_over_tau * v_now + soe_history_term(history, soe, tau_n) / tau_n)[()]


def truncated_tail_mass(soe: SoeApprox) -> float:
    """
    ∫_0^∞ of the frequency content above the largest node, c·θ_max^{−α}/α.

    The literal fast formula evaluates the SOE on its newest cell down to
    distance 0, so its error carries this mass times |v^{n−3/2}|/τ_n.
    """
    scale = 1.0 / (gamma_fn(soe.alpha) * gamma_fn(1.0 - soe.alpha))
    return float(scale * soe.nodes.max() ** (-soe.alpha) / soe.alpha)


def fast_l1r_error_bound(soe: SoeApprox, tau_min: float, horizon: float) -> float:
    """Bound on |fast − direct|/max|v| for ``fast_l1r_derivative`` on steps >= ``tau_min`` up to ``horizon``."""
    if not 0 < tau_min <= horizon <= soe.horizon:
        raise InvalidParameterError(
            f"Need 0 < tau_min <= horizon <= {soe.horizon}, got {tau_min}, {horizon}"
        )
    certified = 2.0 * soe.tol * (horizon + float(omega(1.0 + soe.alpha, horizon)))
    return 2.0 * (truncated_tail_mass(soe) + certified) / tau_min


def soe_history_term(
    history: NDArray[np.float64], soe: SoeApprox, tau_n: float
) -> NDArray[np.float64]:
    """−Σ_ℓ ϖ^ℓ(1 − e^{−θ^ℓτ_n})H^ℓ: the SOE surrogate of Σ_{k<n} a^{(n)}_{n−k}v^{k−1/2}."""
    coefficients = soe.weights * np.expm1(-soe.nodes * tau_n)
    result: NDArray[np.float64] = np.tensordot(coefficients, history, axes=1)
    return result


class SoeHistory:
    """
    Per-mode accumulators of one simulation.

    With ``exact_last_cell`` the newest cell v^{n−3/2} stays pending and enters
    the history sum through the exact kernel a^{(n)}_1; the SOE then only sees
    cells at distance >= τ_n + τ_{n−1}. Otherwise every cell is folded in
    immediately and the literal fast formula applies.
    """

    def __init__(
        self,
        soe: SoeApprox,
        shape: tuple[int, ...],
        exact_last_cell: bool = settings.SOE_EXACT_LAST_CELL,
    ):
        self.soe = soe
        self.exact_last_cell = exact_last_cell
        self.accumulators = np.zeros((soe.num_nodes,) + shape, dtype=np.float64)
        self._pending: tuple[NDArray[np.float64], float] | None = None

    def history_sum(self, tau_n: float, a1: float) -> NDArray[np.float64]:
        """Approximation of Σ_{k<n} a^{(n)}_{n−k}v^{k−1/2} for the step of size τ_n."""
        if self._pending is None:
            return soe_history_term(self.accumulators, self.soe, tau_n)

        v_last, tau_last = self._pending
        nodes, weights = self.soe.nodes, self.soe.weights
        coefficients = weights * np.expm1(-nodes * tau_n) * _decay(nodes, tau_last)
        older: NDArray[np.float64] = np.tensordot(
            coefficients, self.accumulators, axes=1
        )
        return a1 * v_last + older

    def push(self, v_mid: NDArray[np.float64], tau: float) -> None:
        if not self.exact_last_cell:
            self.accumulators = history_update(
                self.accumulators, v_mid, tau, self.soe.nodes
            )
            return

        if self._pending is not None:
            v_last, tau_last = self._pending
            self.accumulators = history_update(
                self.accumulators, v_last, tau_last, self.soe.nodes
            )
        self._pending = (np.array(v_mid, dtype=np.float64), tau)
