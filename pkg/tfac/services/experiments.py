"""Experiment drivers behind the CLI commands; each returns data, writing is left to the caller."""

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from tfac.constants import (
    COARSEN_EPSILON,
    COARSEN_GAMMA,
    COARSEN_LENGTH,
    COARSEN_M1,
    COARSEN_N0,
    COARSEN_T0,
    KERNEL_IDENTITY_TOL,
    MANUFACTURED_EPSILON,
    MANUFACTURED_LENGTH,
    MAX_BOUND_SLACK,
    RANDOM_AMPLITUDE,
    SINGULARITY_POINTS,
)
from tfac.enums import EigenvalueKind, StepperMode
from tfac.schemas.experiments import (
    AdaptiveSummary,
    ConvergenceRow,
    KernelCheckRow,
    ManufacturedCase,
    MaxboundSummary,
    SingularitySummary,
    SoeCheckRow,
)
from tfac.schemas.grid import GridField, GridSpec
from tfac.schemas.mesh import AdaptiveController, TimeMesh
from tfac.schemas.solver import ModelConfig, NewtonOptions, SolveRecord
from tfac.services.diagnostics import (
    check_dissipation,
    convergence_orders,
    fit_loglog_slope,
    restriction_bound,
)
from tfac.services.frac_kernels import (
    KernelTable,
    doc_lower_bound_gap,
    identity_residuals,
    l1r_derivative,
    leading_a_kernels,
    omega,
    positive_definite_gap,
)
from tfac.services.manufactured import exact_solution, spatial_mode
from tfac.services.periodic_grid import random_field
from tfac.services.resource_limits import run_sweep
from tfac.services.soe_compress import (
    build_soe,
    certification_grid,
    eval_soe,
    fast_l1r_derivative,
    fast_l1r_error_bound,
    history_update,
    soe_error,
)
from tfac.services.stepper import SolverState, simulate, simulate_adaptive
from tfac.services.time_mesh import (
    build_graded,
    build_graded_random,
    build_graded_uniform,
    build_uniform,
    make_generator,
)
from tfac.settings import settings


logger = logging.getLogger(__name__)


@dataclass(eq=False)
class MaxboundRun:
    summary: MaxboundSummary
    times: NDArray[np.float64]
    max_norms: NDArray[np.float64]


@dataclass(eq=False)
class SingularityRun:
    summary: SingularitySummary
    t_mid: NDArray[np.float64]
    samples: NDArray[np.float64]
    norm_inf: NDArray[np.float64]


@dataclass(eq=False)
class Snapshot:
    requested: float
    t: float
    field: GridField


@dataclass(eq=False)
class CoarsenRun:
    summary: AdaptiveSummary
    records: list[SolveRecord]
    mesh: TimeMesh
    snapshots: list[Snapshot] = field(default_factory=list)


def _newton(newton_tol: float) -> NewtonOptions:
    return NewtonOptions(tol_inf=newton_tol)


def _unforced_model(alpha: float, m1: int, length: float, epsilon: float) -> ModelConfig:
    return ModelConfig(
        alpha=alpha, epsilon=epsilon, grid=GridSpec(length=length, m1=m1)
    )


def converge_error(
    case: ManufacturedCase,
    gamma: float,
    n_steps: int,
    m1: int,
    T: float,
    seed: int,
    mode: StepperMode = StepperMode.DIRECT,
    newton_tol: float = settings.NEWTON_TOL,
) -> tuple[float, float]:
    """
    One manufactured run on the graded-random mesh.

    Returns:
        Tuple of (τ_max, max_n ‖u(t_n) − u^n‖_∞)
    """
    mesh = build_graded_random(gamma, T, n_steps, seed)
    grid = GridSpec(length=case.length, m1=m1)
    config = ModelConfig(alpha=case.alpha, epsilon=case.epsilon, grid=grid, forcing=case)
    mode_values = spatial_mode(grid)
    worst = [0.0]

    def track_error(state: SolverState) -> None:
        exact = float(omega(1.0 + case.sigma, state.t)) * mode_values
        worst[0] = max(worst[0], float(np.max(np.abs(state.u_now - exact))))

    simulate(
        exact_solution(case, 0.0, grid),
        mesh,
        config,
        _newton(newton_tol),
        mode,
        monitor_energy=False,
        observers=[track_error],
    )
    return mesh.max_step, worst[0]


def run_converge(
    alpha: float,
    sigma: float,
    gamma: float,
    n_list: Sequence[int],
    m1: int = 128,
    seed: int = 0,
    T: float = 1.0,
    epsilon: float = MANUFACTURED_EPSILON,
    length: float = MANUFACTURED_LENGTH,
    eigenvalue: EigenvalueKind = EigenvalueKind.DISCRETE,
    mode: StepperMode = StepperMode.DIRECT,
    newton_tol: float = settings.NEWTON_TOL,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """Temporal errors and observed orders log(e_{k−1}/e_k)/log(τ_{k−1}/τ_k) over ``n_list``."""
    case = ManufacturedCase(
        sigma=sigma, alpha=alpha, epsilon=epsilon, length=length, eigenvalue=eigenvalue
    )
    logger.info(
        "Convergence sweep: alpha=%g sigma=%g gamma=%g N=%s M1=%d",
        alpha,
        sigma,
        gamma,
        list(n_list),
        m1,
    )

    results = run_sweep(
        converge_error,
        [(case, gamma, n, m1, T, seed, mode, newton_tol) for n in n_list],
        workers,
    )
    steps = [tau for tau, _ in results]
    errors = [error for _, error in results]
    orders = convergence_orders(steps, errors)

    rows = []
    for n, tau, error, order in zip(n_list, steps, errors, orders):
        rows.append(
            ConvergenceRow(
                alpha=alpha,
                sigma=sigma,
                gamma=gamma,
                n_steps=n,
                tau_max=tau,
                error=error,
                order=order,
            )
        )
        logger.info("N=%d tau_max=%.4e error=%.4e order=%s", n, tau, error, order)
    return rows


def run_maxbound(
    alpha: float,
    tau: float,
    T: float = 40.0,
    m1: int = COARSEN_M1,
    length: float = COARSEN_LENGTH,
    epsilon: float = COARSEN_EPSILON,
    amplitude: float = RANDOM_AMPLITUDE,
    seed: int = 0,
    mode: StepperMode = StepperMode.FAST,
    newton_tol: float = settings.NEWTON_TOL,
) -> MaxboundRun:
    """
    Uniform-step run from random data; tracks ‖u^n‖_∞ against the unit bound.

    One τ per call: the maxbound command fans a τ list out over ``run_sweep`` so
    each run can sit in its own worker.
    """
    mesh = build_uniform(T, tau)
    config = _unforced_model(alpha, m1, length, epsilon)
    u0 = random_field(config.grid, amplitude, seed)

    state = simulate(u0, mesh, config, _newton(newton_tol), mode, monitor_energy=False)

    times = np.array([record.t for record in state.records])
    max_norms = np.array([record.max_norm for record in state.records])
    peak = float(max_norms.max())
    exceeded = peak > 1.0 + MAX_BOUND_SLACK
    if exceeded:
        logger.warning("alpha=%g tau=%g: max-norm %.6f exceeds 1", alpha, tau, peak)

    summary = MaxboundSummary(
        alpha=alpha,
        tau=tau,
        bound=restriction_bound(alpha, 1.0, config.grid.h, epsilon),
        restriction_ok=all(record.restriction_ok for record in state.records[1:]),
        max_norm=peak,
        exceeded=exceeded,
    )
    return MaxboundRun(summary=summary, times=times, max_norms=max_norms)


def sample_indices(m1: int) -> list[tuple[int, int]]:
    return [(round(fx * m1) % m1, round(fy * m1) % m1) for fx, fy in SINGULARITY_POINTS]


def run_singularity(
    alpha: float,
    gamma: float,
    n_steps: int,
    m1: int = COARSEN_M1,
    length: float = COARSEN_LENGTH,
    epsilon: float = COARSEN_EPSILON,
    amplitude: float = RANDOM_AMPLITUDE,
    seed: int = 0,
    fit_until: float = COARSEN_T0,
    mode: StepperMode = StepperMode.DIRECT,
    newton_tol: float = settings.NEWTON_TOL,
) -> SingularityRun:
    """
    |∂_τu^{n−1/2}| at the sample points on t_n = T(n/N)^γ with T = 1/γ.

    The log-log slope of ‖∂_τu^{n−1/2}‖_∞ is fitted over t_{n−1/2} <= ``fit_until``.
    """
    mesh = build_graded(1.0 / gamma, n_steps, gamma)
    config = _unforced_model(alpha, m1, length, epsilon)
    points = sample_indices(m1)
    rows: list[list[float]] = []
    norms: list[float] = []

    def record_rate(state: SolverState) -> None:
        rate = np.abs(state.u_now - state.u_prev) / mesh.tau(state.n)
        rows.append([float(rate[i, j]) for i, j in points])
        norms.append(float(rate.max()))

    simulate(
        random_field(config.grid, amplitude, seed),
        mesh,
        config,
        _newton(newton_tol),
        mode,
        monitor_energy=False,
        observers=[record_rate],
    )

    t_mid = 0.5 * (mesh.points[1:] + mesh.points[:-1])
    norm_inf = np.array(norms)
    window = t_mid <= fit_until
    slope = fit_loglog_slope(t_mid[window], norm_inf[window])
    logger.info("Singularity: alpha=%g gamma=%g slope=%.4f", alpha, gamma, slope)

    return SingularityRun(
        summary=SingularitySummary(alpha=alpha, gamma=gamma, slope=slope),
        t_mid=t_mid,
        samples=np.array(rows),
        norm_inf=norm_inf,
    )


def run_coarsen(
    alpha: float,
    kappa: float | None,
    T: float = 40.0,
    tau: float = 0.01,
    m1: int = COARSEN_M1,
    length: float = COARSEN_LENGTH,
    epsilon: float = COARSEN_EPSILON,
    amplitude: float = RANDOM_AMPLITUDE,
    seed: int = 0,
    t0: float = COARSEN_T0,
    n0: int = COARSEN_N0,
    grading: float = COARSEN_GAMMA,
    tau_min: float = 1e-3,
    tau_max: float = 0.1,
    enforce_restriction: bool = False,
    snapshot_times: Sequence[float] = (),
    monitor_energy: bool = True,
    mode: StepperMode = StepperMode.FAST,
    newton_tol: float = settings.NEWTON_TOL,
) -> CoarsenRun:
    """
    Coarsening from small random data on a graded start cell.

    With ``kappa`` set the tail is adaptive; with ``kappa=None`` it is uniform with
    step ``tau`` (the graded-uniform reference). Snapshots are taken at the first
    t_n >= each requested time. Adaptive runs always monitor the variational energy.
    """
    config = _unforced_model(alpha, m1, length, epsilon)
    u0 = random_field(config.grid, amplitude, seed)
    graded = build_graded(t0, n0, grading)
    options = _newton(newton_tol)

    pending = sorted(snapshot_times)
    snapshots: list[Snapshot] = []

    def take_snapshots(state: SolverState) -> None:
        while pending and state.t >= pending[0] * (1.0 - 1e-12):
            snapshots.append(Snapshot(pending.pop(0), state.t, state.current_field))

    started = time.perf_counter()
    if kappa is None:
        mesh = build_graded_uniform(t0, n0, grading, T, tau)
        state = simulate(
            u0,
            mesh,
            config,
            options,
            mode,
            monitor_energy=monitor_energy,
            observers=[take_snapshots],
        )
        label = f"uniform tau={tau:g}"
    else:
        controller = AdaptiveController(
            kappa=kappa,
            tau_min=tau_min,
            tau_max=tau_max,
            enforce_restriction=enforce_restriction,
        )
        state, mesh = simulate_adaptive(
            u0, graded, controller, T, config, options, mode, observers=[take_snapshots]
        )
        label = f"kappa={kappa:g}"
    wall_time = time.perf_counter() - started

    final = state.records[-1]
    dissipation_ok = None
    if final.energy_alpha is not None:
        dissipation_ok = all(check_dissipation(state.records, alpha))
    max_norm = max(record.max_norm for record in state.records)
    if max_norm > 1.0 + MAX_BOUND_SLACK:
        logger.warning("%s: max-norm %.6f exceeds 1", label, max_norm)

    summary = AdaptiveSummary(
        label=label,
        alpha=alpha,
        steps=mesh.num_steps,
        final_energy=final.energy,
        final_energy_alpha=final.energy_alpha,
        max_norm=max_norm,
        dissipation_ok=dissipation_ok,
        wall_time_s=wall_time,
    )
    logger.info("Coarsening %s: alpha=%g steps=%d E(T)=%.6f", label, alpha, mesh.num_steps, final.energy)
    return CoarsenRun(summary=summary, records=state.records, mesh=mesh, snapshots=snapshots)


def run_adaptive_comparison(
    alpha: float,
    kappas: Sequence[float],
    tau: float = 0.01,
    T: float = 40.0,
    workers: int = 1,
    **kwargs: object,
) -> list[AdaptiveSummary]:
    """Adaptive runs for every κ plus the graded-uniform reference, in that order."""
    schedules: list[float | None] = [*kappas, None]
    runs = run_sweep(
        _coarsen_summary,
        [(alpha, kappa, T, tau, kwargs) for kappa in schedules],
        workers,
    )
    return runs


def _coarsen_summary(
    alpha: float, kappa: float | None, T: float, tau: float, options: dict[str, object]
) -> AdaptiveSummary:
    return run_coarsen(alpha, kappa, T, tau, **options).summary  # type: ignore[arg-type]


def random_mesh(n_steps: int, generator: np.random.Generator) -> TimeMesh:
    """Steps 1 − U with U uniform on [0, 1), so every step lies in (0, 1]."""
    return TimeMesh.from_steps(1.0 - generator.random(n_steps))


def check_kernels(alpha: float, mesh: TimeMesh, index: int, w: NDArray[np.float64]) -> KernelCheckRow:
    """Worst residuals of every kernel identity and inequality over steps 1..N of one mesh."""
    table = KernelTable(alpha, mesh, retain=True)
    n_total = mesh.num_steps
    worst = {"orthogonality": 0.0, "mutual": 0.0, "complementary": 0.0, "dcc": 0.0}
    scaled_ok = True
    positivity = np.inf
    monotonicity = np.inf
    lower_bound = np.inf

    for n in range(1, n_total + 1):
        for key, residual in identity_residuals(table, n).items():
            size = float(np.max(np.abs(residual)))
            worst[key] = max(worst[key], size)
            scaled_ok = scaled_ok and size <= KERNEL_IDENTITY_TOL * n

        theta = table.theta_row(n)
        positivity = min(positivity, float(theta.min()))
        if n >= 2:
            monotonicity = min(monotonicity, float(np.diff(theta).min()))
            lower_bound = min(lower_bound, doc_lower_bound_gap(table, n))

    definite = positive_definite_gap(table, w)
    passed = (
        scaled_ok
        and positivity > 0
        and monotonicity > 0
        and lower_bound > -KERNEL_IDENTITY_TOL * n_total
        and definite >= -KERNEL_IDENTITY_TOL * n_total * (1.0 + float(w @ w))
    )
    if not passed:
        logger.warning("Kernel checks failed on mesh %d (alpha=%g)", index, alpha)

    return KernelCheckRow(
        alpha=alpha,
        mesh=index,
        n_steps=n_total,
        orthogonality=worst["orthogonality"],
        mutual=worst["mutual"],
        complementary=worst["complementary"],
        dcc=worst["dcc"],
        doc_positivity=positivity,
        doc_monotonicity=monotonicity,
        doc_lower_bound=lower_bound,
        positive_definite=definite,
        passed=passed,
    )


def kernel_dump(alpha: float, mesh: TimeMesh) -> NDArray[np.float64]:
    """Rows (n, k, a, q, θ, p, orthogonality residual) of the last step of ``mesh``."""
    table = KernelTable(alpha, mesh, retain=True)
    n = mesh.num_steps
    k = np.arange(1, n + 1, dtype=np.float64)
    residual = identity_residuals(table, n)["orthogonality"]
    return np.column_stack(
        (
            np.full(n, n, dtype=np.float64),
            k,
            table.a_row(n),
            table.q_row(n),
            table.theta_row(n),
            table.p_row(n),
            residual,
        )
    )


def verify_kernels(
    alpha: float, n_steps: int, meshes: int, seed: int = 0
) -> tuple[list[KernelCheckRow], NDArray[np.float64]]:
    """
    Kernel identity suite on ``meshes`` random meshes drawn from one seeded generator.

    Returns:
        Tuple of (per-mesh check rows, kernel dump of the first mesh)
    """
    generator = make_generator(seed)
    rows = []
    dump = None
    for index in range(meshes):
        mesh = random_mesh(n_steps, generator)
        w = generator.standard_normal(n_steps)
        rows.append(check_kernels(alpha, mesh, index, w))
        if dump is None:
            dump = kernel_dump(alpha, mesh)

    assert dump is not None
    logger.info(
        "Kernel suite alpha=%g: %d/%d meshes passed",
        alpha,
        sum(row.passed for row in rows),
        meshes,
    )
    return rows, dump


def compare_fast_direct(
    alpha: float,
    n_steps: int,
    m1: int,
    T: float = 40.0,
    seed: int = 0,
    soe_tol: float = settings.SOE_TOL,
    soe_cutoff: float = settings.SOE_CUTOFF,
) -> float:
    """max_n ‖u^n_fast − u^n_direct‖_∞ over a coarsening run with uniform steps T/N."""
    mesh = build_uniform(T, T / n_steps)
    config = _unforced_model(alpha, m1, COARSEN_LENGTH, COARSEN_EPSILON)
    u0 = random_field(config.grid, RANDOM_AMPLITUDE, seed)
    soe = build_soe(alpha, soe_tol, soe_cutoff, T, settings.SOE_SAMPLES)

    direct: list[NDArray[np.float64]] = []
    gap = [0.0]

    def keep(state: SolverState) -> None:
        direct.append(state.u_now.copy())

    def compare(state: SolverState) -> None:
        gap[0] = max(gap[0], float(np.max(np.abs(state.u_now - direct[state.n - 1]))))

    simulate(u0, mesh, config, mode=StepperMode.DIRECT, monitor_energy=False, observers=[keep])
    simulate(
        u0, mesh, config, mode=StepperMode.FAST, soe=soe, monitor_energy=False, observers=[compare]
    )
    logger.info("Fast vs direct: alpha=%g steps=%d gap=%.3e", alpha, n_steps, gap[0])
    return gap[0]


def compare_fast_derivative(
    alpha: float,
    n_steps: int = 200,
    tau: float = 0.01,
    soe_tol: float = settings.SOE_TOL,
    soe_cutoff: float = settings.SOE_CUTOFF,
    seed: int = 0,
) -> tuple[float, float]:
    """
    Literal fast L1_R derivative against the direct kernel sum on a random scalar history.

    Returns:
        Tuple of (max_n |fast − direct|/max|v|, the a-priori bound for that gap)
    """
    mesh = build_uniform(n_steps * tau, tau)
    soe = build_soe(alpha, soe_tol, soe_cutoff, mesh.final_time, settings.SOE_SAMPLES)
    table = KernelTable(alpha, mesh, retain=False)
    v = make_generator(seed).uniform(-1.0, 1.0, n_steps)
    history = np.zeros(soe.num_nodes, dtype=np.float64)
    worst = 0.0

    for n in range(1, n_steps + 1):
        tau_n = mesh.tau(n)
        a0, _ = leading_a_kernels(mesh, alpha, n)
        fast = fast_l1r_derivative(a0 / tau_n, v[n - 1], history, soe, tau_n)
        direct = l1r_derivative(v[:n], table, n)
        worst = max(worst, abs(float(fast) - float(direct)))
        history = history_update(history, v[n - 1], tau_n, soe.nodes)

    gap = worst / float(np.max(np.abs(v)))
    bound = fast_l1r_error_bound(soe, mesh.min_step, mesh.final_time)
    logger.info(
        "Fast L1_R formula: alpha=%g steps=%d gap=%.3e bound=%.3e", alpha, n_steps, gap, bound
    )
    return gap, bound


def verify_soe(
    alpha: float,
    tol: float = settings.SOE_TOL,
    cutoff: float = settings.SOE_CUTOFF,
    horizon: float = 40.0,
    samples: int = settings.SOE_SAMPLES,
) -> tuple[SoeCheckRow, NDArray[np.float64]]:
    """
    Certificate of one SOE approximation.

    Returns:
        Tuple of (summary row, table of (t, ω_α, SOE, relative error))
    """
    soe = build_soe(alpha, tol, cutoff, horizon, samples)
    t = certification_grid(cutoff, horizon, samples)
    table = np.column_stack(
        (t, omega(alpha, t), eval_soe(soe, t), soe_error(alpha, soe.nodes, soe.weights, t))
    )
    max_error = float(table[:, 3].max())
    row = SoeCheckRow(
        alpha=alpha,
        tol=tol,
        cutoff=cutoff,
        horizon=horizon,
        num_nodes=soe.num_nodes,
        max_error=max_error,
        passed=max_error <= tol,
    )
    return row, table
