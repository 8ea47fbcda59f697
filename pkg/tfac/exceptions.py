import json
from typing import Any


class TfacError(Exception):
    """Base class for every error raised by the solver and the CLI."""

    exit_code = 1


class InvalidParameterError(TfacError, ValueError):
    """Raised when an operation precondition is violated."""

    exit_code = 2


class DomainError(InvalidParameterError):
    """Raised when a kernel is evaluated outside its domain."""

    pass


class LengthMismatchError(InvalidParameterError):
    """Raised when a history does not have the expected length."""

    pass


class GridMismatchError(InvalidParameterError):
    """Raised when two grid fields live on different grids."""

    pass


class ConfigurationError(TfacError):
    """Raised for unusable run configuration (config files, mode/mesh conflicts)."""

    exit_code = 2


class SoeConstructionError(TfacError):
    """Raised when a sum-of-exponentials approximation cannot be certified."""

    exit_code = 3


class NewtonDivergenceError(TfacError):
    """Raised when the per-step Newton iteration hits its cap."""

    exit_code = 4

    def __init__(self, step: int, residual: float, iterations: int):
        self.step = step
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Newton did not converge at step {step} after {iterations} "
            f"iterations (residual {residual:.3e})"
        )

    def __reduce__(self) -> tuple[Any, ...]:
        return (self.__class__, (self.step, self.residual, self.iterations))


class RunLimitError(TfacError):
    """Raised when a sweep worker exceeds a resource limit."""

    exit_code = 5


class RunTimeoutError(RunLimitError):
    """Raised when a sweep worker exceeds its time limit."""

    pass


class MemoryLimitError(RunLimitError):
    """Raised when a sweep worker exceeds its memory limit."""

    pass


class SolvabilityWarning(UserWarning):
    """Issued when a step exceeds the unique-solvability threshold."""

    pass


def error_line(exc: BaseException) -> str:
    detail: dict[str, Any] = {
        "error_type": exc.__class__.__name__,
        "error": str(exc),
    }
    return json.dumps({"detail": detail})
