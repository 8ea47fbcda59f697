import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

from tfac.schemas.experiments import ManufacturedCase
from tfac.schemas.grid import GridSpec
from tfac.settings import settings


class ModelConfig(BaseModel):
    """Model coefficients and spatial grid of one simulation."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0, lt=1, description="Fractional order")
    epsilon: float = Field(..., gt=0, description="Interface width coefficient")
    grid: GridSpec
    forcing: ManufacturedCase | None = Field(
        default=None, description="Exterior force; None for the unforced model"
    )

    @property
    def is_forced(self) -> bool:
        return self.forcing is not None


class NewtonOptions(BaseModel):
    """Per-step nonlinear solver controls."""

    model_config = ConfigDict(frozen=True)

    tol_inf: float = Field(default=settings.NEWTON_TOL, gt=0)
    max_iters: int = Field(default=settings.NEWTON_MAX_ITERS, ge=1)
    linear_tol: float = Field(default=settings.CG_TOL, gt=0)
    linear_max_iters: int = Field(default=settings.CG_MAX_ITERS, ge=1)


class SolveRecord(BaseModel):
    """Diagnostics of one completed time step."""

    n: int = Field(..., ge=0)
    t: float
    tau: float
    energy: float = Field(..., description="Original discrete energy E")
    energy_alpha: float | None = Field(
        default=None, description="Variational energy; None when the monitor is off"
    )
    max_norm: float
    newton_iters: int = Field(default=0, ge=0)
    restriction_ok: bool = True
    caputo_residual: float | None = None
    v_norm2: float = Field(
        default=0.0, ge=0, description="Squared discrete L2 norm of v^{n-1/2}"
    )

    @field_validator("t", "tau", "energy", "max_norm", "v_norm2")
    @classmethod
    def must_be_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("energy_alpha", "caputo_residual")
    @classmethod
    def optional_finite(cls, value: float | None) -> float | None:
        if value is not None and not math.isfinite(value):
            raise ValueError("must be finite")
        return value
