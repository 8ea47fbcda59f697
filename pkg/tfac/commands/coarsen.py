import logging
from typing import Any

from tfac.schemas.experiments import AdaptiveSummary, ExperimentConfig
from tfac.services.experiments import run_adaptive_comparison, run_coarsen
from tfac.services.resource_limits import run_sweep
from tfac.utils.output import (
    ensure_dir,
    format_number,
    write_mesh_csv,
    write_models_csv,
    write_records_csv,
    write_snapshot,
)


logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "label",
    "alpha",
    "steps",
    "final_energy",
    "final_energy_alpha",
    "max_norm",
    "dissipation_ok",
    "wall_time_s",
]
SUMMARY_HEADER = [
    "label",
    "alpha",
    "steps",
    "final_E",
    "final_E_alpha",
    "max_norm",
    "dissipation_ok",
    "wall_time_s",
]


def coarsen_options(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "m1": config.m1,
        "length": config.length,
        "epsilon": config.epsilon,
        "amplitude": config.amplitude,
        "seed": config.seed,
        "t0": config.t0,
        "n0": config.n0,
        "grading": config.grading,
        "tau_min": config.tau_min,
        "tau_max": config.tau_max,
        "enforce_restriction": config.enforce_restriction,
        "monitor_energy": config.monitor_energy,
        "mode": config.mode,
        "newton_tol": config.newton_tol,
    }


def _write_summary(config: ExperimentConfig, name: str, rows: list[AdaptiveSummary]) -> None:
    write_models_csv(ensure_dir(config.out) / name, rows, SUMMARY_COLUMNS, SUMMARY_HEADER)
    for row in rows:
        if row.dissipation_ok is False:
            logger.warning("%s (alpha=%g): energy law flagged", row.label, row.alpha)


def run_coarsening(config: ExperimentConfig) -> int:
    """Graded-adaptive runs per (α, κ), each in its own directory with records, mesh and snapshots."""
    options = coarsen_options(config)
    items = [
        (alpha, kappa, config.T, config.taus[0])
        for alpha in config.alphas
        for kappa in config.kappas
    ]
    runs = run_sweep(
        _coarsen_with_snapshots,
        [(*item, config.snapshot_times, options) for item in items],
        config.workers,
    )

    for (alpha, kappa, _, _), result in zip(items, runs):
        directory = ensure_dir(
            config.out / f"alpha{format_number(alpha)}_kappa{format_number(kappa)}"
        )
        write_records_csv(directory / "records.csv", result.records)
        write_mesh_csv(directory / "mesh.csv", result.mesh)
        for snapshot in result.snapshots:
            write_snapshot(directory, snapshot.t, snapshot.field, config.snapshot_format)

    _write_summary(config, "coarsen_summary.csv", [result.summary for result in runs])
    return 0


def _coarsen_with_snapshots(
    alpha: float,
    kappa: float,
    T: float,
    tau: float,
    snapshot_times: list[float],
    options: dict[str, Any],
) -> Any:
    return run_coarsen(alpha, kappa, T, tau, snapshot_times=snapshot_times, **options)


def run_comparison(config: ExperimentConfig) -> int:
    """Step counts of every κ against the graded-uniform mesh with step ``taus[0]``."""
    rows: list[AdaptiveSummary] = []
    for alpha in config.alphas:
        rows.extend(
            run_adaptive_comparison(
                alpha,
                config.kappas,
                tau=config.taus[0],
                T=config.T,
                workers=config.workers,
                **coarsen_options(config),
            )
        )

    _write_summary(config, "adaptive_summary.csv", rows)
    return 0
