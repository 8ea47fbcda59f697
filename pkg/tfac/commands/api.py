import argparse
from pathlib import Path
from typing import Callable

from tfac.commands import coarsen, converge, maxbound, singularity, verify
from tfac.enums import Command, EigenvalueKind, SnapshotFormat, StepperMode
from tfac.schemas.experiments import ExperimentConfig
from tfac.settings import settings


Handler = Callable[[ExperimentConfig], int]

HANDLERS: dict[Command, tuple[Handler, str]] = {
    Command.CONVERGE: (converge.run, "Manufactured-solution temporal convergence"),
    Command.MAXBOUND: (maxbound.run, "Maximum norm on uniform meshes"),
    Command.SINGULARITY: (singularity.run, "Initial-singularity study on graded meshes"),
    Command.COARSEN: (coarsen.run_coarsening, "Coarsening dynamics with snapshots"),
    Command.ADAPTIVE: (coarsen.run_comparison, "Adaptive versus graded-uniform stepping"),
    Command.VERIFY_KERNELS: (verify.run_kernels, "Kernel identity suite"),
    Command.VERIFY_SOE: (verify.run_soe, "SOE certificate and fast/direct agreement"),
}


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags mirror config-file keys; unset flags fall back to the file, then defaults."""
    suppress = argparse.SUPPRESS
    add = parser.add_argument

    add("--config", dest="config_path", type=Path, default=None, help="key = value file")
    add("--alpha", dest="alphas", type=float, nargs="+", default=suppress)
    add("--sigma", type=float, default=suppress)
    add("--gamma", dest="gammas", type=float, nargs="+", default=suppress)
    add("--n-steps", dest="n_steps", type=int, nargs="+", default=suppress)
    add("--tau", dest="taus", type=float, nargs="+", default=suppress)
    add("--kappa", dest="kappas", type=float, nargs="+", default=suppress)
    add("--m1", type=int, default=suppress, help="Grid points per dimension")
    add("--length", type=float, default=suppress, help="Domain edge length L")
    add("--epsilon", "--eps-int", dest="epsilon", type=float, default=suppress)
    add("--T", dest="T", type=float, default=suppress, help="Final time")
    add("--t0", type=float, default=suppress, help="End of the graded start cell")
    add("--n0", type=int, default=suppress, help="Steps in the graded start cell")
    add("--grading", type=float, default=suppress, help="Grading of the start cell")
    add("--tau-min", dest="tau_min", type=float, default=suppress)
    add("--tau-max", dest="tau_max", type=float, default=suppress)
    add("--enforce-restriction", action="store_true", default=suppress)
    add("--amplitude", type=float, default=suppress, help="Random initial data range")
    add("--seed", type=int, default=suppress)
    add("--mode", choices=[mode.value for mode in StepperMode], default=suppress)
    add("--eigenvalue", choices=[kind.value for kind in EigenvalueKind], default=suppress)
    add("--meshes", type=int, default=suppress, help="Random meshes for verify-kernels")
    add("--snapshot-times", dest="snapshot_times", type=float, nargs="+", default=suppress)
    add(
        "--snapshot-format",
        dest="snapshot_format",
        choices=[fmt.value for fmt in SnapshotFormat],
        default=suppress,
    )
    add(
        "--no-energy-monitor",
        dest="monitor_energy",
        action="store_false",
        default=suppress,
    )
    add("--soe-tol", dest="soe_tol", type=float, default=suppress)
    add("--soe-cutoff", dest="soe_cutoff", type=float, default=suppress)
    add("--newton-tol", dest="newton_tol", type=float, default=suppress)
    add("--workers", type=int, default=suppress)
    add("--out", type=Path, default=suppress, help="Output directory")
    add("--log-level", dest="log_level", default=suppress)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_TITLE,
        description="Time-fractional Allen-Cahn experiments",
    )
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)

    for command, (handler, summary) in HANDLERS.items():
        sub = subparsers.add_parser(command.value, help=summary, description=summary)
        add_common_arguments(sub)
        sub.set_defaults(handler=handler)

    return parser
