"""
CSV tables with unit-tagged headers and ``#`` metadata lines.

A header name ends in its unit after the last underscore (``power_mw``,
``freq_ghz``, ``s21_mag``).  Floats are written with ``repr`` so a
write/read roundtrip is exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..errors import MagnonLabError

# unit tag -> factor to canonical SI (dimensionless tags map to 1)
COLUMN_UNITS = {
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "w": 1.0, "mw": 1e-3, "uw": 1e-6,
    "t": 1.0, "mt": 1e-3,
    "dbm": 1.0, "db": 1.0, "mag": 1.0, "rad": 1.0, "count": 1.0,
}


class DataError(MagnonLabError, ValueError):
    pass


def column_unit(name: str) -> str:
    unit = name.rsplit("_", 1)[-1].lower() if "_" in name else ""
    if unit not in COLUMN_UNITS:
        raise DataError(f"column {name!r} has no recognised unit tag (one of {', '.join(COLUMN_UNITS)})")
    return unit


@dataclass
class DataTable:
    columns: list[str]
    data: np.ndarray  # shape (rows, columns)
    meta: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        for name in self.columns:
            column_unit(name)
        if len(set(self.columns)) != len(self.columns):
            raise DataError(f"duplicate column names in {self.columns}")

    @classmethod
    def from_columns(cls, named: Sequence[tuple[str, Sequence[float]]], meta=None) -> "DataTable":
        names = [n for n, _ in named]
        cols = [np.asarray(v, float) for _, v in named]
        if len({len(c) for c in cols}) > 1:
            raise DataError("columns have different lengths")
        return cls(names, np.column_stack(cols) if cols else np.empty((0, 0)), list(meta or []))

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise DataError(f"missing column {name!r}; table has {', '.join(self.columns)}")
        return self.data[:, self.columns.index(name)]

    def si(self, name: str) -> np.ndarray:
        return self.column(name) * COLUMN_UNITS[column_unit(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.meta:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.data:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def metadata(command: str, seed: Optional[int], resolved: str) -> list[str]:
    """Reproducibility header: toolkit version, command, seed and the canonical scenario."""
    lines = [f"magnonlab {__version__}", f"command: {command}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines += [f"config: {ln}" if ln else "config:" for ln in resolved.rstrip("\n").split("\n")]
    return lines


def _split(text: str, source: str):
    meta, body = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            meta.append(line[1:].strip())
        elif line.strip():
            body.append((lineno, line))
    if not body:
        raise DataError(f"{source}: no header row")
    return meta, body


def read_table(text: str, source: str = "<csv>") -> DataTable:
    meta, body = _split(text, source)
    rows = list(csv.reader([b for _, b in body]))
    header = [h.strip() for h in rows[0]]
    try:
        for h in header:
            column_unit(h)
    except DataError as exc:
        raise DataError(f"{source}:{body[0][0]}: {exc}") from None
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        lineno = body[i + 1][0]
        if len(row) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} fields, found {len(row)}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{source}:{lineno}: column {j + 1} ({header[j]}): not a number: {cell.strip()!r}"
                ) from None
            if not np.isfinite(values[i, j]):
                raise DataError(f"{source}:{lineno}: column {j + 1} ({header[j]}): non-finite value")
    return DataTable(header, values, meta)


def load_table(path) -> DataTable:
    with open(path, encoding="utf-8") as fh:
        return read_table(fh.read(), source=str(path))


def matrix_csv(row_axis, row_name, col_axis, col_name, values, meta=()) -> str:
    """Matrix layout: first row is the column axis, first column the row axis."""
    column_unit(row_name)
    column_unit(col_name)
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{row_name}\\{col_name}"] + [repr(float(x)) for x in col_axis])
    for r, row in zip(row_axis, values):
        w.writerow([repr(float(r))] + [repr(float(x)) for x in row])
    return buf.getvalue()


def read_matrix(text: str, source: str = "<csv>"):
    """Inverse of :func:`matrix_csv`: ``(row_axis, col_axis, values, (row_name, col_name))``."""
    _, body = _split(text, source)
    rows = list(csv.reader([b for _, b in body]))
    corner = rows[0][0]
    if "\\" not in corner:
        raise DataError(f"{source}:{body[0][0]}: matrix corner cell must be 'rows\\cols'")
    names = tuple(corner.split("\\", 1))
    try:
        cols = np.array([float(x) for x in rows[0][1:]])
        data = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{source}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(cols) + 1:
        raise DataError(f"{source}: ragged matrix")
    return data[:, 0], cols, data[:, 1:], names
