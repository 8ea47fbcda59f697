from dataclasses import dataclass
from functools import cached_property
import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tfac.exceptions import InvalidParameterError


def _read_only(values: NDArray[np.float64]) -> NDArray[np.float64]:
    view = values.view()
    view.setflags(write=False)
    return view


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """
    Strictly increasing time points t_0 = 0 < t_1 < ... < t_N.

    Array attributes are 0-based: ``steps[n - 1]`` is τ_n and ``ratios[n - 1]``
    is r_n. The first ratio r_1 is set to 1 (there is no τ_0).
    Use ``tau(n)`` / ``ratio(n)`` for 1-based access.
    """

    points: NDArray[np.float64]

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 1 or points.size < 2:
            raise InvalidParameterError("A mesh needs at least two time points")
        if points[0] != 0.0:
            raise InvalidParameterError(f"Mesh must start at t_0 = 0, got {points[0]}")
        if not np.all(np.diff(points) > 0):
            raise InvalidParameterError("Mesh points must be strictly increasing")

        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @classmethod
    def _shared(
        cls,
        points: NDArray[np.float64],
        steps: NDArray[np.float64],
        ratios: NDArray[np.float64],
    ) -> "TimeMesh":
        """Wrap buffers that are already valid, without copying them."""
        mesh = object.__new__(cls)
        object.__setattr__(mesh, "points", _read_only(points))
        mesh.__dict__["steps"] = _read_only(steps)
        mesh.__dict__["ratios"] = _read_only(ratios)
        return mesh

    @classmethod
    def from_steps(cls, steps: ArrayLike) -> "TimeMesh":
        steps = np.asarray(steps, dtype=np.float64)
        return cls(np.concatenate(([0.0], np.cumsum(steps))))

    @cached_property
    def steps(self) -> NDArray[np.float64]:
        steps = np.diff(self.points)
        steps.setflags(write=False)
        return steps

    @cached_property
    def ratios(self) -> NDArray[np.float64]:
        ratios = np.ones_like(self.steps)
        ratios[1:] = self.steps[1:] / self.steps[:-1]
        ratios.setflags(write=False)
        return ratios

    @property
    def num_steps(self) -> int:
        return self.points.size - 1

    @property
    def final_time(self) -> float:
        return float(self.points[-1])

    @property
    def min_step(self) -> float:
        return float(self.steps.min())

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    def tau(self, n: int) -> float:
        self._check_index(n)
        return float(self.steps[n - 1])

    def ratio(self, n: int) -> float:
        self._check_index(n)
        return float(self.ratios[n - 1])

    def midpoint(self, n: int) -> float:
        self._check_index(n)
        return 0.5 * float(self.points[n - 1] + self.points[n])

    def _check_index(self, n: int) -> None:
        if not 1 <= n <= self.num_steps:
            raise InvalidParameterError(
                f"Step index {n} outside 1..{self.num_steps}"
            )


def _enlarged(values: NDArray[np.float64], capacity: int) -> NDArray[np.float64]:
    grown = np.empty(capacity, dtype=np.float64)
    grown[: values.size] = values
    return grown


class MeshBuilder:
    """
    Mesh that grows one point at a time, for runs that choose their steps on the fly.

    ``mesh`` shares the builder's buffers, so taking it after every step is O(1).
    Points already handed out are never overwritten.
    """

    def __init__(self, start: TimeMesh, capacity: int = 256):
        self.size = start.points.size
        capacity = max(capacity, self.size)
        self._points = np.empty(capacity, dtype=np.float64)
        self._steps = np.empty(capacity - 1, dtype=np.float64)
        self._ratios = np.empty(capacity - 1, dtype=np.float64)
        self._points[: self.size] = start.points
        self._steps[: self.size - 1] = start.steps
        self._ratios[: self.size - 1] = start.ratios

    @property
    def final_time(self) -> float:
        return float(self._points[self.size - 1])

    @property
    def mesh(self) -> TimeMesh:
        size = self.size
        return TimeMesh._shared(
            self._points[:size], self._steps[: size - 1], self._ratios[: size - 1]
        )

    def append_point(self, t: float) -> None:
        tau = t - self.final_time
        if not tau > 0:
            raise InvalidParameterError(
                f"Point {t} does not lie after the mesh end {self.final_time}"
            )
        if self.size == self._points.size:
            self._grow()

        n = self.size
        self._points[n] = t
        self._steps[n - 1] = tau
        self._ratios[n - 1] = tau / self._steps[n - 2]
        self.size += 1

    def _grow(self) -> None:
        capacity = 2 * self._points.size
        self._points = _enlarged(self._points, capacity)
        self._steps = _enlarged(self._steps, capacity - 1)
        self._ratios = _enlarged(self._ratios, capacity - 1)


class AdaptiveController(BaseModel):
    """Energy-variation step controller."""

    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., ge=0, description="Adaptivity level")
    tau_min: float = Field(..., gt=0, description="Smallest admissible step")
    tau_max: float = Field(..., gt=0, description="Largest admissible step")
    enforce_restriction: bool = Field(
        default=False,
        description="Additionally clip each step by the max-bound step restriction",
    )

    @model_validator(mode="after")
    def check_bounds(self) -> "AdaptiveController":
        if self.tau_min > self.tau_max:
            raise ValueError("tau_min must not exceed tau_max")
        return self
