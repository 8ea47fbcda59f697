import logging
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel

from tfac.enums import SnapshotFormat
from tfac.exceptions import InvalidParameterError
from tfac.schemas.grid import GridField
from tfac.schemas.mesh import TimeMesh
from tfac.schemas.solver import SolveRecord
from tfac.services.periodic_grid import write_snapshot_bin, write_snapshot_csv


logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "n",
    "t",
    "tau",
    "E",
    "E_alpha",
    "max_norm",
    "newton_iters",
    "restriction_ok",
]


def ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def format_number(value: float) -> str:
    """Compact filename-safe rendering of a parameter, e.g. 0.1 -> '0.1', 40.0 -> '40'."""
    return f"{value:g}"


def write_table_csv(path: Path, header: Sequence[str], table: ArrayLike) -> Path:
    """Numeric table with a plain header line; values keep full double precision."""
    rows = np.atleast_2d(np.asarray(table, dtype=np.float64))
    if rows.size and rows.shape[1] != len(header):
        raise InvalidParameterError(f"Table has {rows.shape[1]} columns, header {len(header)}")

    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    logger.info("Wrote %s (%d rows)", path, rows.shape[0] if rows.size else 0)
    return path


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.17g}"
    return str(value)


def _write_lines(path: Path, header: Sequence[str], lines: list[list[str]]) -> Path:
    np.savetxt(
        path,
        np.array(lines, dtype=str).reshape(len(lines), len(header)),
        fmt="%s",
        delimiter=",",
        header=",".join(header),
        comments="",
    )
    logger.info("Wrote %s (%d rows)", path, len(lines))
    return path


def write_models_csv(
    path: Path,
    models: Iterable[BaseModel],
    columns: Sequence[str] | None = None,
    header: Sequence[str] | None = None,
) -> Path:
    """One row per model dump; None becomes an empty cell and booleans 0/1. ``header`` renames ``columns``."""
    dumps = [model.model_dump(mode="json") for model in models]
    if columns is None:
        columns = list(dumps[0]) if dumps else []

    lines = [[_cell(dump.get(column)) for column in columns] for dump in dumps]
    return _write_lines(path, header or columns, lines)


def write_records_csv(path: Path, records: Sequence[SolveRecord]) -> Path:
    """records.csv; a caputo_residual column is added when any step computed it."""
    columns = list(RECORD_COLUMNS)
    with_caputo = any(record.caputo_residual is not None for record in records)
    if with_caputo:
        columns.append("caputo_residual")

    renamed = {"E": "energy", "E_alpha": "energy_alpha"}
    lines = []
    for record in records:
        dump = record.model_dump()
        lines.append([_cell(dump[renamed.get(column, column)]) for column in columns])
    return _write_lines(path, columns, lines)


def write_mesh_csv(path: Path, mesh: TimeMesh) -> Path:
    index = np.arange(mesh.points.size)
    return write_table_csv(path, ["index", "t"], np.column_stack((index, mesh.points)))


def write_snapshot(
    directory: Path, t: float, field: GridField, fmt: SnapshotFormat
) -> Path:
    """snapshot_t<t>.bin or .csv for the actual time t reached."""
    path = directory / f"snapshot_t{format_number(t)}.{fmt.value}"
    if fmt == SnapshotFormat.BIN:
        write_snapshot_bin(path, field)
    else:
        write_snapshot_csv(path, field)
    logger.info("Wrote snapshot %s", path)
    return path
