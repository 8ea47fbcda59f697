import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator, cg

from tfac.enums import StepperMode
from tfac.exceptions import (
    ConfigurationError,
    InvalidParameterError,
    LengthMismatchError,
    NewtonDivergenceError,
    SolvabilityWarning,
)
from tfac.schemas.grid import GridField
from tfac.schemas.mesh import AdaptiveController, MeshBuilder, TimeMesh
from tfac.schemas.solver import ModelConfig, NewtonOptions, SolveRecord
from tfac.services.bulk_nonlinearity import bulk_H, bulk_H_partial_a, potential_F
from tfac.services.diagnostics import (
    caputo_form_residual,
    max_bound_restriction,
    restricted_step,
    solvability_threshold,
)
from tfac.services.frac_kernels import KernelTable, leading_a_kernels, q_kernels
from tfac.services.manufactured import manufactured_forcing_cell_average
from tfac.services.periodic_grid import five_point_laplacian
from tfac.services.soe_compress import SoeApprox, SoeHistory, build_soe
from tfac.services.time_mesh import adaptive_next_step
from tfac.settings import settings


logger = logging.getLogger(__name__)

Observer = Callable[["SolverState"], None]


class MidpointHistory:
    """Growable stack of v^{k−1/2} fields; ``view()`` is (n, M1, M1)."""

    def __init__(self, shape: tuple[int, ...], capacity: int = 64):
        self._data = np.empty((capacity,) + shape, dtype=np.float64)
        self.size = 0

    def append(self, values: NDArray[np.float64]) -> None:
        if self.size == self._data.shape[0]:
            grown = np.empty(
                (2 * self._data.shape[0],) + self._data.shape[1:], dtype=np.float64
            )
            grown[: self.size] = self._data
            self._data = grown
        self._data[self.size] = values
        self.size += 1

    def view(self) -> NDArray[np.float64]:
        return self._data[: self.size]


@dataclass(eq=False)
class SolverState:
    """
    Mutable state of one simulation at t_n.

    ``v_norms2[k−1]`` holds ‖v^{k−1/2}‖²_h, which is all the variational energy
    needs since the q weights do not vary in space.
    """

    config: ModelConfig
    mode: StepperMode
    n: int
    t: float
    u_now: NDArray[np.float64]
    u_prev: NDArray[np.float64]
    v_history: MidpointHistory | None = None
    soe_history: SoeHistory | None = None
    v_norms2: list[float] = field(default_factory=list)
    records: list[SolveRecord] = field(default_factory=list)
    monitor_energy: bool = True
    u_history: list[NDArray[np.float64]] | None = None
    forcing_increments: list[NDArray[np.float64]] | None = None

    @property
    def current_field(self) -> GridField:
        return GridField(self.config.grid, self.u_now)


def energy_original(u: GridField, config: ModelConfig) -> float:
    """E = h²ΣF(u) − (ε²/2)·h²·uᵀD_h u."""
    h = u.spec.h
    bulk = np.sum(potential_F(u.values))
    interface = np.sum(u.values * five_point_laplacian(u.values, h))
    return float(h**2 * (bulk - 0.5 * config.epsilon**2 * interface))


def _memory_term(q_row: NDArray[np.float64], v_norms2: Sequence[float]) -> float:
    return float(0.5 * q_row @ np.asarray(v_norms2, dtype=np.float64))


def energy_variational(state: SolverState, table: KernelTable, n: int) -> float:
    """E_α[u^n] = E[u^n] + ½Σ_k q^{(n)}_{n−k}‖v^{k−1/2}‖²_h."""
    if not 0 <= n <= state.n:
        raise LengthMismatchError(f"No history for step {n} (current step {state.n})")

    energy = state.records[n].energy
    if n == 0:
        return energy
    return energy + _memory_term(table.q_row(n), state.v_norms2[:n])


def init_state(
    u0: GridField,
    config: ModelConfig,
    mode: StepperMode = StepperMode.DIRECT,
    soe: SoeApprox | None = None,
    monitor_energy: bool = True,
    retain_u_history: bool = False,
) -> SolverState:
    if u0.spec != config.grid:
        raise InvalidParameterError("Initial field does not live on the model grid")
    if mode == StepperMode.FAST and soe is None:
        raise ConfigurationError("Fast mode needs an SOE approximation")

    u = np.array(u0.values, dtype=np.float64)
    state = SolverState(
        config=config,
        mode=mode,
        n=0,
        t=0.0,
        u_now=u,
        u_prev=u.copy(),
        monitor_energy=monitor_energy,
    )

    if mode == StepperMode.DIRECT:
        state.v_history = MidpointHistory(config.grid.shape)
    else:
        assert soe is not None
        state.soe_history = SoeHistory(soe, config.grid.shape)

    if retain_u_history:
        state.u_history = [u.copy()]
        state.forcing_increments = []

    energy = energy_original(u0, config)
    state.records.append(
        SolveRecord(
            n=0,
            t=0.0,
            tau=0.0,
            energy=energy,
            energy_alpha=energy,
            max_norm=float(np.max(np.abs(u))),
        )
    )
    return state


def _newton_solve(
    n: int,
    u_prev: NDArray[np.float64],
    rhs: NDArray[np.float64],
    a0: float,
    config: ModelConfig,
    options: NewtonOptions,
) -> tuple[NDArray[np.float64], int]:
    """
    Solve u + a0·[H(u, u_prev) − (ε²/2)D_h(u + u_prev)] = rhs by Newton with
    matrix-free Jacobi-preconditioned CG on J = I + a0·[diag(∂H/∂a) − (ε²/2)D_h].
    """
    h = config.grid.h
    half_eps2 = 0.5 * config.epsilon**2
    size = u_prev.size
    shape = u_prev.shape
    known = rhs + a0 * half_eps2 * five_point_laplacian(u_prev, h)

    u = u_prev.copy()
    for iteration in range(options.max_iters + 1):
        residual = (
            u + a0 * (bulk_H(u, u_prev) - half_eps2 * five_point_laplacian(u, h)) - known
        )
        residual_norm = float(np.max(np.abs(residual)))
        logger.debug("step %d newton %d residual %.3e", n, iteration, residual_norm)

        if residual_norm <= options.tol_inf:
            return u, iteration
        if iteration == options.max_iters or not math.isfinite(residual_norm):
            raise NewtonDivergenceError(n, residual_norm, iteration)

        slope = bulk_H_partial_a(u, u_prev)
        diagonal = (1.0 + a0 * (slope + 4.0 * half_eps2 / h**2)).ravel()

        def jacobian(x: NDArray[np.float64]) -> NDArray[np.float64]:
            x = x.reshape(shape)
            return (x + a0 * (slope * x - half_eps2 * five_point_laplacian(x, h))).ravel()

        operator = LinearOperator((size, size), matvec=jacobian, dtype=np.float64)
        preconditioner = LinearOperator(
            (size, size), matvec=lambda x: x / diagonal, dtype=np.float64
        )
        delta, info = cg(
            operator,
            residual.ravel(),
            rtol=options.linear_tol,
            atol=0.0,
            maxiter=options.linear_max_iters,
            M=preconditioner,
        )
        if info < 0:
            raise NewtonDivergenceError(n, residual_norm, iteration)
        if info > 0:
            logger.warning(
                "step %d: CG stopped after %d iterations above rtol %.1e",
                n,
                info,
                options.linear_tol,
            )

        u = u - delta.reshape(shape)

    raise NewtonDivergenceError(n, math.inf, options.max_iters)


def _advance(
    state: SolverState,
    mesh: TimeMesh,
    config: ModelConfig,
    options: NewtonOptions,
    a0: float,
    history_sum: NDArray[np.float64] | float,
    q_row: Callable[[], NDArray[np.float64]],
    table: KernelTable | None,
) -> NDArray[np.float64]:
    """Solve step n = state.n + 1 given its history sum; returns v^{n−1/2}."""
    n = state.n + 1
    tau = mesh.tau(n)
    t_prev, t_now = float(mesh.points[n - 1]), float(mesh.points[n])
    alpha = config.alpha

    if tau >= solvability_threshold(alpha):
        message = (
            f"step {n}: tau={tau:.4g} exceeds the unique-solvability threshold "
            f"{solvability_threshold(alpha):.4g}"
        )
        warnings.warn(message, SolvabilityWarning, stacklevel=3)
        logger.warning(message)

    u_prev = state.u_now
    rhs = u_prev + history_sum
    increment = None
    if config.forcing is not None:
        forcing = manufactured_forcing_cell_average(
            config.forcing, t_prev, t_now, config.grid
        )
        increment = tau * forcing.values
        rhs = rhs + increment

    u_new, iterations = _newton_solve(n, u_prev, rhs, a0, config, options)

    h = config.grid.h
    v_mid = config.epsilon**2 * five_point_laplacian(
        0.5 * (u_new + u_prev), h
    ) - bulk_H(u_new, u_prev)

    state.n = n
    state.t = t_now
    state.u_prev = u_prev
    state.u_now = u_new
    state.v_norms2.append(float(h**2 * np.sum(v_mid**2)))
    if state.u_history is not None and state.forcing_increments is not None:
        state.u_history.append(u_new.copy())
        state.forcing_increments.append(
            np.zeros_like(u_new) if increment is None else increment
        )

    field_now = GridField(config.grid, u_new)
    energy = energy_original(field_now, config)
    energy_alpha = None
    if state.monitor_energy:
        energy_alpha = energy + _memory_term(q_row(), state.v_norms2)

    bound = max_bound_restriction(mesh, n, alpha, config.grid, config.epsilon)
    restriction_ok = tau <= bound
    if not restriction_ok:
        logger.debug("step %d: tau=%.4g above the max-bound restriction %.4g", n, tau, bound)

    caputo = None
    if state.u_history is not None and table is not None:
        caputo = caputo_form_residual(state, table, n)

    state.records.append(
        SolveRecord(
            n=n,
            t=t_now,
            tau=tau,
            energy=energy,
            energy_alpha=energy_alpha,
            max_norm=float(np.max(np.abs(u_new))),
            newton_iters=iterations,
            restriction_ok=restriction_ok,
            caputo_residual=caputo,
            v_norm2=state.v_norms2[-1],
        )
    )
    return v_mid


def step(
    state: SolverState,
    mesh: TimeMesh,
    table: KernelTable,
    config: ModelConfig,
    options: NewtonOptions,
) -> SolverState:
    """Direct O(n) history step: Σ_{k<n} a^{(n)}_{n−k}v^{k−1/2} from the stored midpoints."""
    if state.v_history is None:
        raise ConfigurationError("Direct step on a state without midpoint history")

    n = state.n + 1
    a_row = table.a_row(n)
    history_sum: NDArray[np.float64] | float = 0.0
    if n > 1:
        history_sum = np.tensordot(a_row[:-1], state.v_history.view(), axes=1)

    v_mid = _advance(
        state,
        mesh,
        config,
        options,
        float(a_row[-1]),
        history_sum,
        lambda: table.q_row(n),
        table,
    )
    state.v_history.append(v_mid)
    return state


def step_fast(
    state: SolverState,
    mesh: TimeMesh,
    soe: SoeApprox,
    config: ModelConfig,
    options: NewtonOptions,
) -> SolverState:
    """SOE history step; accumulators advance with v^{n−1/2} after the solve."""
    if state.soe_history is None:
        raise ConfigurationError("Fast step on a state without SOE accumulators")

    n = state.n + 1
    tau = mesh.tau(n)
    if n > 1 and tau < soe.cutoff:
        raise ConfigurationError(
            f"step {n}: tau={tau:.3e} is below the SOE cutoff {soe.cutoff:.3e}"
        )

    a0, a1 = leading_a_kernels(mesh, config.alpha, n)
    history_sum = state.soe_history.history_sum(tau, a1)

    v_mid = _advance(
        state,
        mesh,
        config,
        options,
        a0,
        history_sum,
        lambda: q_kernels(mesh, config.alpha, n),
        None,
    )
    state.soe_history.push(v_mid, tau)
    return state


def _check_fast_setup(mesh: TimeMesh, soe: SoeApprox) -> None:
    if mesh.num_steps > 1 and mesh.min_step < soe.cutoff:
        raise ConfigurationError(
            f"Smallest step {mesh.min_step:.3e} is below the SOE cutoff {soe.cutoff:.3e}"
        )


def resolve_soe(alpha: float, horizon: float, soe: SoeApprox | None) -> SoeApprox:
    if soe is None:
        return build_soe(
            alpha, settings.SOE_TOL, settings.SOE_CUTOFF, horizon, settings.SOE_SAMPLES
        )
    if soe.alpha != alpha:
        raise ConfigurationError(f"SOE built for alpha={soe.alpha}, model has {alpha}")
    if soe.horizon < horizon:
        raise ConfigurationError(
            f"SOE certified up to {soe.horizon}, run needs {horizon}"
        )
    return soe


def simulate(
    u0: GridField,
    mesh: TimeMesh,
    config: ModelConfig,
    options: NewtonOptions | None = None,
    mode: StepperMode = StepperMode.DIRECT,
    soe: SoeApprox | None = None,
    monitor_energy: bool = True,
    retain_u_history: bool = False,
    observers: Sequence[Observer] = (),
) -> SolverState:
    """Run every step of a fixed mesh; observers are called after each step."""
    options = options or NewtonOptions()
    started = time.perf_counter()

    table = KernelTable(config.alpha, mesh, retain=retain_u_history)
    if mode == StepperMode.FAST:
        soe = resolve_soe(config.alpha, mesh.final_time, soe)
        _check_fast_setup(mesh, soe)

    state = init_state(u0, config, mode, soe, monitor_energy, retain_u_history)
    for _ in range(mesh.num_steps):
        if mode == StepperMode.FAST:
            assert soe is not None
            step_fast(state, mesh, soe, config, options)
        else:
            step(state, mesh, table, config, options)
        for observer in observers:
            observer(state)

    logger.info(
        "Finished %s run: alpha=%g steps=%d T=%g in %.2fs",
        mode.value,
        config.alpha,
        mesh.num_steps,
        mesh.final_time,
        time.perf_counter() - started,
    )
    return state


def energy_rate(state: SolverState) -> float:
    """Backward difference (E_α^n − E_α^{n−1})/τ_n."""
    current, previous = state.records[-1], state.records[-2]
    if current.energy_alpha is None or previous.energy_alpha is None:
        raise ConfigurationError("Adaptive stepping needs the variational energy monitor")
    return (current.energy_alpha - previous.energy_alpha) / current.tau


def simulate_adaptive(
    u0: GridField,
    graded: TimeMesh,
    controller: AdaptiveController,
    horizon: float,
    config: ModelConfig,
    options: NewtonOptions | None = None,
    mode: StepperMode = StepperMode.FAST,
    soe: SoeApprox | None = None,
    observers: Sequence[Observer] = (),
) -> tuple[SolverState, TimeMesh]:
    """
    Graded prefix followed by energy-driven adaptive steps up to ``horizon``.

    The final step absorbs a remainder shorter than τ_min so no sliver step is taken.

    Returns:
        Tuple of (final state, realized mesh)
    """
    if horizon <= graded.final_time:
        raise InvalidParameterError(
            f"Horizon {horizon} must exceed the graded cell end {graded.final_time}"
        )

    options = options or NewtonOptions()
    started = time.perf_counter()
    builder = MeshBuilder(graded)
    table = KernelTable(config.alpha, graded, retain=False)
    if mode == StepperMode.FAST:
        soe = resolve_soe(config.alpha, horizon, soe)
        _check_fast_setup(graded, soe)

    state = init_state(u0, config, mode, soe, monitor_energy=True)

    def advance(current: TimeMesh) -> None:
        if mode == StepperMode.FAST:
            assert soe is not None
            step_fast(state, current, soe, config, options)
        else:
            table.rebind(current)
            step(state, current, table, config, options)
        for observer in observers:
            observer(state)

    for _ in range(graded.num_steps):
        advance(graded)

    while state.t < horizon:
        tau = adaptive_next_step(controller, energy_rate(state))
        if controller.enforce_restriction:
            tau = restricted_step(
                tau, state.records[-1].tau, config.alpha, config.grid, config.epsilon
            )

        remaining = horizon - builder.final_time
        if remaining <= tau + controller.tau_min:
            builder.append_point(horizon)
        else:
            builder.append_point(builder.final_time + tau)
        advance(builder.mesh)

    mesh = TimeMesh(builder.mesh.points)

    logger.info(
        "Finished adaptive %s run: alpha=%g kappa=%g steps=%d T=%g in %.2fs",
        mode.value,
        config.alpha,
        controller.kappa,
        mesh.num_steps,
        horizon,
        time.perf_counter() - started,
    )
    return state, mesh
