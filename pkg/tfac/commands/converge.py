from tfac.schemas.experiments import ConvergenceRow, ExperimentConfig
from tfac.services.experiments import run_converge
from tfac.utils.output import ensure_dir, write_models_csv


ERROR_COLUMNS = ["alpha", "sigma", "gamma", "n_steps", "tau_max", "error", "order"]
ERROR_HEADER = ["alpha", "sigma", "gamma", "N", "tau_max", "error", "order"]


def run(config: ExperimentConfig) -> int:
    rows: list[ConvergenceRow] = []
    for alpha in config.alphas:
        for gamma in config.gammas:
            rows.extend(
                run_converge(
                    alpha,
                    config.sigma,
                    gamma,
                    config.n_steps,
                    m1=config.m1,
                    seed=config.seed,
                    T=config.T,
                    epsilon=config.epsilon,
                    length=config.length,
                    eigenvalue=config.eigenvalue,
                    mode=config.mode,
                    newton_tol=config.newton_tol,
                    workers=config.workers,
                )
            )

    out = ensure_dir(config.out)
    write_models_csv(out / "errors.csv", rows, ERROR_COLUMNS, ERROR_HEADER)
    return 0
