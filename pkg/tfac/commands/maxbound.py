import numpy as np

from tfac.schemas.experiments import ExperimentConfig
from tfac.services.experiments import run_maxbound
from tfac.services.resource_limits import run_sweep
from tfac.utils.output import ensure_dir, format_number, write_models_csv, write_table_csv


def run(config: ExperimentConfig) -> int:
    items = [
        (
            alpha,
            tau,
            config.T,
            config.m1,
            config.length,
            config.epsilon,
            config.amplitude,
            config.seed,
            config.mode,
            config.newton_tol,
        )
        for alpha in config.alphas
        for tau in config.taus
    ]
    runs = run_sweep(run_maxbound, items, config.workers)

    out = ensure_dir(config.out)
    for result in runs:
        summary = result.summary
        name = f"maxbound_alpha{format_number(summary.alpha)}_tau{format_number(summary.tau)}.csv"
        write_table_csv(
            out / name, ["t", "max_norm"], np.column_stack((result.times, result.max_norms))
        )

    write_models_csv(out / "maxbound_summary.csv", [result.summary for result in runs])
    return 0
