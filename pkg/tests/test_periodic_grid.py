import math

import numpy as np
import pytest

from tfac.exceptions import GridMismatchError, InvalidParameterError
from tfac.schemas.grid import GridField, GridSpec
from tfac.services.periodic_grid import (
    five_point_laplacian,
    inner_h,
    laplacian_apply,
    laplacian_eigenvalue,
    laplacian_matrix,
    norm_inf,
    norm_l2h,
    random_field,
    read_snapshot_bin,
    stencil_entries,
    write_snapshot_bin,
    write_snapshot_csv,
)
from tfac.services.time_mesh import make_generator


def sine_mode(spec: GridSpec, wave: int = 1) -> GridField:
    k = 2.0 * math.pi * wave / spec.length
    return GridField.from_function(spec, lambda x, y: np.sin(k * x) * np.sin(k * y))


def test_laplacian_of_constant_vanishes(small_grid):
    result = laplacian_apply(GridField.constant(small_grid, 3.0))

    np.testing.assert_allclose(result.values, 0.0, atol=1e-12)


@pytest.mark.parametrize("wave", [1, 2])
def test_sine_mode_is_eigenfunction(wave):
    spec = GridSpec(length=1.0, m1=16)
    mode = sine_mode(spec, wave)
    result = laplacian_apply(mode)

    np.testing.assert_allclose(
        result.values, -laplacian_eigenvalue(spec, wave) * mode.values, atol=1e-9
    )


def test_discrete_eigenvalue_approaches_continuous():
    spec = GridSpec(length=1.0, m1=128)

    assert laplacian_eigenvalue(spec) == pytest.approx(8.0 * math.pi**2, rel=1e-3)


@pytest.mark.parametrize("m1", [2, 3, 8])
def test_laplacian_matrix_matches_stencil(m1, rng):
    spec = GridSpec(length=2.0 * math.pi, m1=m1)
    values = rng.standard_normal(spec.shape)
    matrix = laplacian_matrix(spec)

    np.testing.assert_allclose(
        matrix @ values.ravel(),
        five_point_laplacian(values, spec.h).ravel(),
        atol=1e-12,
    )
    assert abs(matrix - matrix.T).max() == 0.0
    diagonal, neighbours = stencil_entries(spec)
    assert matrix.diagonal()[0] == pytest.approx(diagonal)
    assert np.asarray(matrix.sum(axis=1)).ravel() == pytest.approx(0.0, abs=1e-12)
    assert len(neighbours) == 4


def test_laplacian_matrix_size_limit():
    with pytest.raises(InvalidParameterError):
        laplacian_matrix(GridSpec(length=1.0, m1=17))


@pytest.mark.parametrize("seed", range(5))
def test_laplacian_is_negative_semidefinite(seed):
    spec = GridSpec(length=2.0 * math.pi, m1=16)
    u = GridField(spec, make_generator(seed).standard_normal(spec.shape))

    assert inner_h(u, laplacian_apply(u)) <= 1e-12 * norm_l2h(u) ** 2


@pytest.mark.parametrize("seed", range(5))
def test_shifted_laplacian_lower_bounds(seed):
    generator = make_generator(100 + seed)
    spec = GridSpec(length=1.0, m1=12)
    a, c = generator.uniform(0.1, 10.0, size=2)
    v = GridField(spec, generator.standard_normal(spec.shape))
    size = norm_inf(v)
    shifted = a * v.values - laplacian_apply(v).values

    assert np.max(np.abs(shifted)) >= a * size * (1.0 - 1e-12)

    # |U| is the same at every point, so the peak of |V| also sees |U|_inf
    u = generator.uniform(0.5, 2.0) * generator.choice([-1.0, 1.0], size=spec.shape)
    full = shifted + u**2 * v.values + c * v.values**3
    expected = a * size + np.max(np.abs(u)) ** 2 * size + c * size**3

    assert np.max(np.abs(full)) >= expected * (1.0 - 1e-12)

    rough = generator.standard_normal(spec.shape)
    peak = np.unravel_index(np.argmax(np.abs(v.values)), spec.shape)
    full = shifted + rough**2 * v.values + c * v.values**3
    expected = a * size + rough[peak] ** 2 * size + c * size**3

    assert np.max(np.abs(full)) >= expected * (1.0 - 1e-12)


def test_norms():
    spec = GridSpec(length=2.0, m1=4)
    ones = GridField.constant(spec, 1.0)
    field = GridField(spec, np.diag([1.0, -3.0, 0.5, 0.0]))

    assert inner_h(ones, ones) == pytest.approx(4.0)
    assert norm_l2h(ones) == pytest.approx(2.0)
    assert norm_inf(field) == 3.0


def test_grid_field_checks_shape(small_grid):
    with pytest.raises(GridMismatchError):
        GridField(small_grid, np.zeros((3, 3)))


def test_fields_on_different_grids(small_grid):
    other = GridSpec(length=1.0, m1=small_grid.m1)

    with pytest.raises(GridMismatchError):
        inner_h(GridField.constant(small_grid, 1.0), GridField.constant(other, 1.0))


def test_grid_field_wraps_indices(small_grid, rng):
    field = GridField(small_grid, rng.standard_normal(small_grid.shape))

    assert field.at(-1, 0) == field.values[small_grid.m1 - 1, 0]
    assert field.at(small_grid.m1, 2) == field.values[0, 2]


def test_grid_field_is_read_only(small_grid):
    field = GridField.constant(small_grid, 1.0)

    with pytest.raises(ValueError):
        field.values[0, 0] = 2.0


def test_random_field(small_grid):
    field = random_field(small_grid, 1e-3, seed=4)

    assert norm_inf(field) <= 1e-3
    np.testing.assert_array_equal(field.values, random_field(small_grid, 1e-3, seed=4).values)


def test_snapshot_bin(tmp_path, small_grid, rng):
    field = GridField(small_grid, rng.standard_normal(small_grid.shape))
    path = tmp_path / "snapshot.bin"
    write_snapshot_bin(path, field)
    loaded = read_snapshot_bin(path)

    assert path.stat().st_size == 16 + 8 * small_grid.m1**2
    assert loaded.spec == small_grid
    np.testing.assert_array_equal(loaded.values, field.values)


def test_truncated_snapshot(tmp_path):
    path = tmp_path / "broken.bin"
    path.write_bytes(b"\x00" * 8)

    with pytest.raises(GridMismatchError):
        read_snapshot_bin(path)


def test_snapshot_csv(tmp_path, small_grid):
    path = tmp_path / "snapshot.csv"
    write_snapshot_csv(path, GridField.constant(small_grid, 0.25))
    lines = path.read_text().splitlines()

    assert lines[0] == "i,j,value"
    assert len(lines) == 1 + small_grid.m1**2
    assert lines[1] == "0,0,0.25"
