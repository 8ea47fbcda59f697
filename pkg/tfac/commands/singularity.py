import numpy as np

from tfac.constants import SINGULARITY_POINTS
from tfac.schemas.experiments import ExperimentConfig
from tfac.services.experiments import run_singularity
from tfac.services.resource_limits import run_sweep
from tfac.utils.output import ensure_dir, format_number, write_models_csv, write_table_csv


def run(config: ExperimentConfig) -> int:
    items = [
        (
            alpha,
            gamma,
            config.n_steps[0],
            config.m1,
            config.length,
            config.epsilon,
            config.amplitude,
            config.seed,
            config.t0,
            config.mode,
            config.newton_tol,
        )
        for alpha in config.alphas
        for gamma in config.gammas
    ]
    runs = run_sweep(run_singularity, items, config.workers)

    out = ensure_dir(config.out)
    header = ["t_mid", *(f"point_{k}" for k in range(len(SINGULARITY_POINTS))), "norm_inf"]
    for result in runs:
        summary = result.summary
        name = (
            f"singularity_alpha{format_number(summary.alpha)}"
            f"_gamma{format_number(summary.gamma)}.csv"
        )
        table = np.column_stack((result.t_mid, result.samples, result.norm_inf))
        write_table_csv(out / name, header, table)

    write_models_csv(out / "singularity_summary.csv", [result.summary for result in runs])
    return 0
