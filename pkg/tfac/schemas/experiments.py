from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tfac.constants import (
    COARSEN_EPSILON,
    COARSEN_GAMMA,
    COARSEN_LENGTH,
    COARSEN_M1,
    COARSEN_N0,
    COARSEN_T0,
    MANUFACTURED_EPSILON,
    MANUFACTURED_LENGTH,
    RANDOM_AMPLITUDE,
)
from tfac.enums import Command, EigenvalueKind, SnapshotFormat, StepperMode
from tfac.settings import settings


class ManufacturedCase(BaseModel):
    """Exact solution u = ω_{1+σ}(t)·sin(2πx/L)·sin(2πy/L) and its exterior force."""

    model_config = ConfigDict(frozen=True)

    sigma: float = Field(..., gt=0, lt=1, description="Regularity parameter")
    alpha: float = Field(..., gt=0, lt=1, description="Fractional order")
    epsilon: float = Field(default=MANUFACTURED_EPSILON, gt=0)
    length: float = Field(default=MANUFACTURED_LENGTH, gt=0)
    eigenvalue: EigenvalueKind = Field(
        default=EigenvalueKind.DISCRETE,
        description="Laplacian eigenvalue of the spatial mode used to build the force",
    )


class ConvergenceRow(BaseModel):
    """One row of a temporal convergence table."""

    alpha: float
    sigma: float
    gamma: float
    n_steps: int = Field(..., ge=1)
    tau_max: float = Field(..., gt=0)
    error: float = Field(..., ge=0)
    order: float | None = None


COMMAND_DEFAULTS: dict[Command, dict[str, Any]] = {
    Command.CONVERGE: {
        "alphas": [0.6],
        "sigma": 0.4,
        "gammas": [4.0],
        "n_steps": [100, 200, 400, 800],
        "m1": 128,
        "length": MANUFACTURED_LENGTH,
        "epsilon": MANUFACTURED_EPSILON,
        "T": 1.0,
        "mode": StepperMode.DIRECT,
    },
    Command.MAXBOUND: {
        "alphas": [0.7],
        "taus": [0.1],
        "T": 40.0,
        "mode": StepperMode.FAST,
    },
    Command.SINGULARITY: {
        "alphas": [0.7],
        "gammas": [1.0, 3.0],
        "n_steps": [100],
        "mode": StepperMode.DIRECT,
    },
    Command.COARSEN: {
        "alphas": [0.4, 0.7, 0.9],
        "kappas": [1000.0],
        "T": 40.0,
        "snapshot_times": [10.0, 40.0],
        "mode": StepperMode.FAST,
    },
    Command.ADAPTIVE: {
        "alphas": [0.7],
        "kappas": [10.0, 100.0, 1000.0],
        "taus": [0.01],
        "T": 40.0,
        "mode": StepperMode.FAST,
    },
    Command.VERIFY_KERNELS: {
        "alphas": [0.3, 0.5, 0.7, 0.9],
        "n_steps": [50],
        "meshes": 20,
    },
    Command.VERIFY_SOE: {
        "alphas": [0.4, 0.8],
        "T": 40.0,
        "n_steps": [400],
        "m1": 64,
    },
}


class ExperimentConfig(BaseModel):
    """Flat parameter set of one CLI invocation; unset values take per-command defaults."""

    command: Command

    alphas: list[float] = Field(default_factory=lambda: [0.7], min_length=1)
    sigma: float = Field(default=0.4, gt=0, lt=1)
    gammas: list[float] = Field(default_factory=lambda: [COARSEN_GAMMA], min_length=1)
    n_steps: list[int] = Field(default_factory=lambda: [100], min_length=1)
    taus: list[float] = Field(default_factory=lambda: [0.01], min_length=1)
    kappas: list[float] = Field(default_factory=lambda: [1000.0], min_length=1)

    m1: int = Field(default=COARSEN_M1, ge=2)
    length: float = Field(default=COARSEN_LENGTH, gt=0)
    epsilon: float = Field(default=COARSEN_EPSILON, gt=0)
    T: float = Field(default=1.0, gt=0, description="Final time")
    t0: float = Field(default=COARSEN_T0, gt=0, description="End of the graded cell")
    n0: int = Field(default=COARSEN_N0, ge=1, description="Steps in the graded cell")
    grading: float = Field(default=COARSEN_GAMMA, ge=1)
    tau_min: float = Field(default=1e-3, gt=0)
    tau_max: float = Field(default=0.1, gt=0)
    enforce_restriction: bool = False

    amplitude: float = Field(default=RANDOM_AMPLITUDE, gt=0, le=1)
    seed: int = Field(default=0, ge=0)
    mode: StepperMode = StepperMode.DIRECT
    eigenvalue: EigenvalueKind = EigenvalueKind.DISCRETE
    meshes: int = Field(default=20, ge=1)

    snapshot_times: list[float] = Field(default_factory=list)
    snapshot_format: SnapshotFormat = SnapshotFormat.BIN
    monitor_energy: bool = True

    soe_tol: float = Field(default=settings.SOE_TOL, gt=0, lt=1)
    soe_cutoff: float = Field(default=settings.SOE_CUTOFF, gt=0)
    newton_tol: float = Field(default=settings.NEWTON_TOL, gt=0)

    workers: int = Field(default=settings.MAX_WORKERS, ge=1)
    out: Path = Field(default=Path(settings.OUTPUT_DIR))

    @model_validator(mode="before")
    @classmethod
    def apply_command_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "command" not in data:
            return data

        command = Command(data["command"])
        return {**COMMAND_DEFAULTS[command], **data}

    @field_validator("alphas")
    @classmethod
    def check_alphas(cls, values: list[float]) -> list[float]:
        for value in values:
            if not 0 < value < 1:
                raise ValueError(f"alpha must lie in (0, 1), got {value}")
        return values

    @field_validator("gammas")
    @classmethod
    def check_gammas(cls, values: list[float]) -> list[float]:
        if any(value < 1 for value in values):
            raise ValueError("grading parameters must be >= 1")
        return values

    @field_validator("n_steps")
    @classmethod
    def check_counts(cls, values: list[int]) -> list[int]:
        if any(value < 1 for value in values):
            raise ValueError("step counts must be positive")
        return values

    @field_validator("taus", "kappas", "snapshot_times")
    @classmethod
    def check_non_negative(cls, values: list[float]) -> list[float]:
        if any(value < 0 for value in values):
            raise ValueError("values must be non-negative")
        return values

    @model_validator(mode="after")
    def check_step_bounds(self) -> "ExperimentConfig":
        if self.tau_min > self.tau_max:
            raise ValueError("tau_min must not exceed tau_max")
        if any(tau == 0 for tau in self.taus):
            raise ValueError("step sizes must be positive")
        return self


class MaxboundSummary(BaseModel):
    """Outcome of one fixed-step maximum-bound run."""

    alpha: float
    tau: float = Field(..., gt=0)
    bound: float = Field(..., gt=0, description="Max-bound step restriction at r = 1")
    restriction_ok: bool
    max_norm: float = Field(..., ge=0)
    exceeded: bool = Field(..., description="Whether max-norm ever left [0, 1]")


class SingularitySummary(BaseModel):
    alpha: float
    gamma: float
    slope: float = Field(..., description="Fitted log-log slope of ‖∂_τu‖ near t = 0")


class AdaptiveSummary(BaseModel):
    """Step count and end state of one coarsening run."""

    label: str
    alpha: float
    steps: int = Field(..., ge=1)
    final_energy: float
    final_energy_alpha: float | None = None
    max_norm: float = Field(..., ge=0)
    dissipation_ok: bool | None = None
    wall_time_s: float = Field(..., ge=0)


class KernelCheckRow(BaseModel):
    """Worst kernel-identity residuals and inequality gaps over all steps of one mesh."""

    alpha: float
    mesh: int = Field(..., ge=0)
    n_steps: int = Field(..., ge=1)
    orthogonality: float
    mutual: float
    complementary: float
    dcc: float
    doc_positivity: float = Field(..., description="min θ; positive when it holds")
    doc_monotonicity: float = Field(..., description="min θ_{k} − θ_{k+1}")
    doc_lower_bound: float
    positive_definite: float
    passed: bool


class SoeCheckRow(BaseModel):
    alpha: float
    tol: float
    cutoff: float
    horizon: float
    num_nodes: int
    max_error: float
    passed: bool
    fast_direct_gap: float | None = Field(
        default=None, description="Max-norm gap between fast and direct runs"
    )
    derivative_gap: float | None = Field(
        default=None,
        description="Worst |fast − direct| L1_R derivative over max|v| on the random history",
    )
    derivative_bound: float | None = None
