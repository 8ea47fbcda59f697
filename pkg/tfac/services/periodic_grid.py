from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from tfac.constants import SNAPSHOT_HEADER_BYTES
from tfac.exceptions import GridMismatchError, InvalidParameterError
from tfac.schemas.grid import GridField, GridSpec
from tfac.services.time_mesh import make_generator


# Largest grid for which the Laplacian matrix may be materialized
MATRIX_HELPER_MAX_M1 = 16

_SNAPSHOT_HEADER = np.dtype([("m1", "<i8"), ("length", "<f8")])


def five_point_laplacian(values: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    """Periodic five-point stencil on a raw M1×M1 array."""
    result: NDArray[np.float64] = (
        np.roll(values, 1, axis=0)
        + np.roll(values, -1, axis=0)
        + np.roll(values, 1, axis=1)
        + np.roll(values, -1, axis=1)
        - 4.0 * values
    ) / h**2
    return result


def laplacian_apply(field: GridField) -> GridField:
    return GridField(field.spec, five_point_laplacian(field.values, field.spec.h))


def laplacian_eigenvalue(spec: GridSpec, wave: int = 1) -> float:
    """−D_h eigenvalue of sin(2π·wave·x/L)·sin(2π·wave·y/L): 2·(2 − 2cos(2π·wave·h/L))/h²."""
    h = spec.h
    return float(8.0 * np.sin(np.pi * wave * h / spec.length) ** 2 / h**2)


def inner_h(u: GridField, w: GridField) -> float:
    """h²·Σ u_ij w_ij (numpy's pairwise summation)."""
    u.same_grid(w)
    return float(u.spec.h**2 * np.sum(u.values * w.values))


def norm_inf(u: GridField) -> float:
    return float(np.max(np.abs(u.values)))


def norm_l2h(u: GridField) -> float:
    return float(np.sqrt(inner_h(u, u)))


def laplacian_matrix(spec: GridSpec) -> sp.csr_matrix:
    """
    Sparse D_h in row-major ordering; small grids only.

    With M1 = 2 both periodic neighbours are the same point and its entry doubles.
    """
    if spec.m1 > MATRIX_HELPER_MAX_M1:
        raise InvalidParameterError(
            f"Matrix helper limited to M1 <= {MATRIX_HELPER_MAX_M1}, got {spec.m1}"
        )

    m1 = spec.m1
    forward = sp.eye(m1, k=1) + sp.eye(m1, k=-(m1 - 1))
    shift = forward + forward.T
    second = (shift - 2.0 * sp.identity(m1)) / spec.h**2
    identity = sp.identity(m1)
    matrix: sp.csr_matrix = sp.csr_matrix(
        sp.kron(second, identity) + sp.kron(identity, second)
    )
    return matrix


def stencil_entries(spec: GridSpec) -> tuple[float, list[float]]:
    """Diagonal and off-diagonal coefficients of one D_h row."""
    h2 = spec.h**2
    return -4.0 / h2, [1.0 / h2] * 4


def random_field(spec: GridSpec, amplitude: float, seed: int) -> GridField:
    """Uniform values on [−amplitude, amplitude] from the seeded Philox generator."""
    draws = make_generator(seed).uniform(-amplitude, amplitude, size=spec.shape)
    return GridField(spec, draws)


def write_snapshot_bin(path: Path, field: GridField) -> None:
    """Little-endian header (int64 M1, float64 L) followed by M1² float64 values, row-major."""
    header = np.array([(field.spec.m1, field.spec.length)], dtype=_SNAPSHOT_HEADER)
    with open(path, "wb") as stream:
        stream.write(header.tobytes())
        stream.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot_bin(path: Path) -> GridField:
    raw = Path(path).read_bytes()
    if len(raw) < SNAPSHOT_HEADER_BYTES:
        raise GridMismatchError(f"Snapshot {path} is truncated")

    header = np.frombuffer(raw[:SNAPSHOT_HEADER_BYTES], dtype=_SNAPSHOT_HEADER)[0]
    m1 = int(header["m1"])
    values = np.frombuffer(raw[SNAPSHOT_HEADER_BYTES:], dtype="<f8")
    if values.size != m1 * m1:
        raise GridMismatchError(
            f"Snapshot {path} holds {values.size} values, expected {m1 * m1}"
        )

    spec = GridSpec(length=float(header["length"]), m1=m1)
    return GridField(spec, values.reshape(m1, m1))


def write_snapshot_csv(path: Path, field: GridField) -> None:
    m1 = field.spec.m1
    i, j = np.meshgrid(np.arange(m1), np.arange(m1), indexing="ij")
    table = np.column_stack((i.ravel(), j.ravel(), field.values.ravel()))
    np.savetxt(
        path,
        table,
        fmt=("%d", "%d", "%.17g"),
        delimiter=",",
        header="i,j,value",
        comments="",
    )
