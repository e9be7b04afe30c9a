"""Reading and writing time-series tables (CSV and JSON records)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .preprocessing import DataError, TimeSeries

FORMATS = ("csv", "json")
REJECTED = {".pkl": "pickle", ".pickle": "pickle", ".h5": "hdf5", ".hdf5": "hdf5", ".mat": "mat",
            ".npy": "numpy", ".npz": "numpy", ".txt": "txt"}


def infer_format(path: str | Path, fmt: str | None = None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in FORMATS:
            raise DataError(f"unsupported input format {fmt!r}; supported formats are {FORMATS}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".json"):
        return suffix[1:]
    kind = REJECTED.get(suffix, suffix or "unknown")
    raise DataError(f"cannot ingest {kind} file {str(path)!r}; convert it to csv or json records")


def _parse_cell(text, row: int, col: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DataError(f"non-numeric value {text!r} at row {row}, column {col!r}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col!r}")
    return value


def read_table(path: str | Path, fmt: str | None = None) -> dict[str, np.ndarray]:
    """Columns of a CSV file (header row) or a JSON array of flat records.

    Rows are numbered from 1 for the first data row.
    """
    path = Path(path)
    fmt = infer_format(path, fmt)
    if not path.is_file():
        raise DataError(f"input file {str(path)!r} does not exist")
    if fmt == "csv":
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{str(path)!r} is empty") from None
            if len(set(header)) != len(header):
                raise DataError(f"duplicate column names in header {header}")
            data = {h: [] for h in header}
            for r, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"row {r} has {len(row)} cells, header has {len(header)}")
                for h, cell in zip(header, row):
                    data[h].append(_parse_cell(cell.strip(), r, h))
    else:
        try:
            records = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON in {str(path)!r}: {exc}") from None
        if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
            raise DataError("JSON input must be an array of records (objects)")
        if not records:
            raise DataError(f"{str(path)!r} holds no records")
        header = list(records[0])
        data = {h: [] for h in header}
        for r, rec in enumerate(records, start=1):
            if set(rec) != set(header):
                raise DataError(f"record {r} has keys {sorted(rec)}, expected {sorted(header)}")
            for h in header:
                if isinstance(rec[h], bool):
                    raise DataError(f"non-numeric value {rec[h]!r} at row {r}, column {h!r}")
                data[h].append(_parse_cell(rec[h], r, h))
    return {h: np.array(v, dtype=float) for h, v in data.items()}


def ingest(path: str | Path, fmt: str | None = None, time: str = "t",
           columns: Sequence[str] | None = None) -> TimeSeries:
    """Load a table as a :class:`TimeSeries` keyed by its ``time`` column."""
    table = read_table(path, fmt)
    if time not in table:
        raise DataError(f"time column {time!r} missing; file has columns {list(table)}")
    names = [c for c in table if c != time] if columns is None else list(columns)
    for c in names:
        if c not in table:
            raise DataError(f"column {c!r} missing; file has columns {list(table)}")
    return TimeSeries(table[time], {c: table[c] for c in names})


def format_float(v: float) -> str:
    return repr(float(v))


def write_table(path: str | Path, columns: Mapping[str, Sequence[float]]) -> Path:
    """Write equal-length numeric columns as CSV with round-trip float formatting."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    if len({a.size for a in arrays}) > 1:
        raise DataError("all columns written to one table must have equal length")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*arrays):
            w.writerow([format_float(v) for v in row])
    return path


def write_series(path: str | Path, series: TimeSeries, time: str = "t") -> Path:
    return write_table(path, {time: series.t, **series.columns})
