import math

import numpy as np
import pytest

from tfac.exceptions import InvalidParameterError
from tfac.schemas.mesh import AdaptiveController, MeshBuilder, TimeMesh
from tfac.services.time_mesh import (
    adaptive_next_step,
    build_graded,
    build_graded_random,
    build_graded_uniform,
    build_uniform,
    random_tail_start,
)


def test_graded_mesh_points():
    mesh = build_graded(1.0, 8, 3.0)

    assert mesh.num_steps == 8
    assert mesh.points[4] == pytest.approx(1.0 / 8.0)
    assert mesh.final_time == 1.0
    assert mesh.ratio(1) == 1.0


def test_graded_uniform_lands_on_horizon():
    mesh = build_graded_uniform(0.01, 30, 3.0, 40.0, 0.01)

    assert mesh.num_steps == 4029
    assert mesh.final_time == 40.0
    assert mesh.tau(mesh.num_steps) == pytest.approx(0.01)
    assert mesh.max_step == pytest.approx(0.01)


def test_uniform_mesh_shortens_last_step():
    mesh = build_uniform(1.0, 0.3)

    assert mesh.num_steps == 4
    assert mesh.tau(4) == pytest.approx(0.1)
    assert mesh.final_time == 1.0


def test_uniform_mesh_exact_division():
    mesh = build_uniform(1.0, 0.1)

    assert mesh.num_steps == 10
    np.testing.assert_allclose(mesh.steps, 0.1, rtol=1e-9)


def test_random_tail_start():
    assert random_tail_start(4.0, 1.0, 800) == (0.25, 458)


def test_graded_random_mesh():
    mesh = build_graded_random(2.0, 1.0, 100, seed=3)
    again = build_graded_random(2.0, 1.0, 100, seed=3)
    other = build_graded_random(2.0, 1.0, 100, seed=4)

    assert mesh.num_steps == 100
    assert mesh.final_time == 1.0
    np.testing.assert_array_equal(mesh.points, again.points)
    assert not np.array_equal(mesh.points, other.points)


def test_graded_random_without_grading_is_uniform():
    mesh = build_graded_random(1.0, 1.0, 100, seed=0)

    assert mesh.num_steps == 100
    np.testing.assert_allclose(mesh.steps, 0.01, rtol=1e-9)


def test_graded_random_needs_tail_steps():
    with pytest.raises(InvalidParameterError):
        build_graded_random(2.0, 2.0, 10, seed=0, T0=0.5, N0=10)


@pytest.mark.parametrize(
    "points",
    [
        [0.0],
        [0.1, 0.5],
        [0.0, 0.5, 0.5],
        [0.0, 0.6, 0.4],
    ],
)
def test_time_mesh_rejects_bad_points(points):
    with pytest.raises(InvalidParameterError):
        TimeMesh(np.array(points))


@pytest.mark.parametrize("args", [(0.0, 10, 2.0), (1.0, 0, 2.0), (1.0, 10, 0.5)])
def test_graded_rejects_bad_parameters(args):
    with pytest.raises(InvalidParameterError):
        build_graded(*args)


def test_mesh_index_is_one_based():
    mesh = TimeMesh.from_steps([0.5, 0.25])

    assert mesh.tau(2) == 0.25
    assert mesh.ratio(2) == 0.5
    assert mesh.midpoint(1) == 0.25
    with pytest.raises(InvalidParameterError):
        mesh.tau(0)
    with pytest.raises(InvalidParameterError):
        mesh.tau(3)


def test_mesh_builder_matches_validated_mesh():
    builder = MeshBuilder(build_graded(0.01, 5, 3.0), capacity=4)
    first = builder.mesh
    for t in [0.05, 0.2, 0.25, 0.7, 1.0]:
        builder.append_point(t)
    mesh = builder.mesh
    reference = TimeMesh(mesh.points)

    assert mesh.num_steps == 10
    assert mesh.tau(10) == pytest.approx(0.3)
    np.testing.assert_array_equal(mesh.steps, reference.steps)
    np.testing.assert_array_equal(mesh.ratios, reference.ratios)
    assert first.num_steps == 5
    assert first.final_time == 0.01
    with pytest.raises(ValueError):
        mesh.points[0] = 1.0


def test_mesh_builder_rejects_points_before_the_end():
    builder = MeshBuilder(build_uniform(1.0, 0.5))

    with pytest.raises(InvalidParameterError):
        builder.append_point(1.0)


def test_adaptive_next_step():
    still = AdaptiveController(kappa=0.0, tau_min=1e-3, tau_max=0.1)
    busy = AdaptiveController(kappa=100.0, tau_min=1e-3, tau_max=0.1)

    assert adaptive_next_step(still, 5.0) == 0.1
    assert adaptive_next_step(busy, 0.1) == pytest.approx(0.1 / math.sqrt(2.0))
    assert adaptive_next_step(busy, 1e6) == 1e-3


def test_adaptive_controller_bounds():
    with pytest.raises(ValueError):
        AdaptiveController(kappa=1.0, tau_min=0.2, tau_max=0.1)
