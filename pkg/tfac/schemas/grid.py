from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from tfac.exceptions import GridMismatchError


FieldFunction = Callable[[NDArray[np.float64], NDArray[np.float64]], ArrayLike]


class GridSpec(BaseModel):
    """Uniform periodic grid on the square [0, L)²."""

    model_config = ConfigDict(frozen=True)

    length: float = Field(..., gt=0, description="Domain edge length L")
    m1: int = Field(..., ge=2, description="Grid points per dimension")

    @property
    def h(self) -> float:
        return self.length / self.m1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m1, self.m1)

    def coordinates(self) -> NDArray[np.float64]:
        return np.arange(self.m1, dtype=np.float64) * self.h


@dataclass(frozen=True, eq=False)
class GridField:
    """Periodic M1×M1 field; index M1 wraps to 0 in either direction."""

    spec: GridSpec
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.spec.shape:
            raise GridMismatchError(
                f"Field shape {values.shape} does not match grid {self.spec.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "GridField":
        return cls(spec, np.full(spec.shape, value, dtype=np.float64))

    @classmethod
    def from_function(cls, spec: GridSpec, func: FieldFunction) -> "GridField":
        x = spec.coordinates()
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return cls(spec, func(xx, yy))

    def at(self, i: int, j: int) -> float:
        m1 = self.spec.m1
        return float(self.values[i % m1, j % m1])

    def same_grid(self, other: "GridField") -> None:
        if self.spec != other.spec:
            raise GridMismatchError(f"Grid mismatch: {self.spec} vs {other.spec}")

