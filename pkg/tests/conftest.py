import math

import numpy as np
import pytest

from tfac.schemas.grid import GridSpec
from tfac.schemas.mesh import TimeMesh
from tfac.schemas.solver import ModelConfig
from tfac.services.time_mesh import make_generator


@pytest.fixture
def small_grid() -> GridSpec:
    return GridSpec(length=2.0 * math.pi, m1=8)


@pytest.fixture
def unforced_config(small_grid: GridSpec) -> ModelConfig:
    return ModelConfig(alpha=0.7, epsilon=0.05, grid=small_grid)


@pytest.fixture
def random_mesh() -> TimeMesh:
    steps = 1.0 - make_generator(11).random(20)
    return TimeMesh.from_steps(steps)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_generator(2024)
