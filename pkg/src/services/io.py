"""CSV reading and writing for datasets and quantile matrices.

Files are UTF-8 with ``.`` decimals and LF line endings; floats are written
with 17 significant digits so a write/load round trip is lossless.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from ..dataset import Dataset
from ..ensemble.quantiles import QuantileMatrix, TauGrid
from ..errors import DataError
from ..schema import CSV_COLUMNS, TAGS, validate_frame

FLOAT_FORMAT = "%.17g"
ENCODING = "utf-8"


def _read_text_frame(path: Path) -> pd.DataFrame:
    if not Path(path).exists():
        raise DataError(f"Input file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding=ENCODING)
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: wrong column count ({exc})") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc


def _file_line(position: int) -> int:
    # header is line 1
    return position + 2


def _check_header(columns: List[str], path: Path) -> None:
    missing = [c for c in CSV_COLUMNS if c not in columns]
    extra = [c for c in columns if c not in CSV_COLUMNS and c not in TAGS]
    if missing or extra:
        details = []
        if missing:
            details.append(f"missing {', '.join(missing)}")
        if extra:
            details.append(f"unexpected {', '.join(extra)}")
        raise DataError(f"{path}: malformed header ({'; '.join(details)}); expected {','.join(CSV_COLUMNS)}")


def _parse_numeric(raw: pd.DataFrame, path: Path) -> pd.DataFrame:
    parsed = pd.DataFrame(index=raw.index)
    problems: List[str] = []
    for column in CSV_COLUMNS:
        values = np.empty(raw.shape[0], dtype=float)
        for pos, cell in enumerate(raw[column].tolist()):
            text = "" if cell is None or (isinstance(cell, float) and math.isnan(cell)) else str(cell).strip()
            if not text:
                problems.append(f"line {_file_line(pos)}: missing value in column '{column}'")
                values[pos] = np.nan
                continue
            try:
                value = float(text)
            except ValueError:
                problems.append(f"line {_file_line(pos)}: non-numeric cell {text!r} in column '{column}'")
                value = np.nan
            else:
                if not math.isfinite(value):
                    problems.append(f"line {_file_line(pos)}: non-finite value {text!r} in column '{column}'")
            values[pos] = value
        parsed[column] = values
    if problems:
        more = f"; ... {len(problems) - 20} more" if len(problems) > 20 else ""
        raise DataError(f"{path}: " + "; ".join(problems[:20]) + more)
    for tag in TAGS:
        if tag in raw.columns:
            parsed[tag] = [str(v) if v not in (None, "") else None for v in raw[tag].tolist()]
    return parsed


def load_csv(path: Path | str) -> Dataset:
    """Read a dataset CSV; every problem is reported with its file line."""
    path = Path(path)
    raw = _read_text_frame(path)
    _check_header(list(raw.columns), path)
    if raw.empty:
        raise DataError(f"{path}: no data rows after the header")
    frame = _parse_numeric(raw.reset_index(drop=True), path)
    frame = validate_frame(frame, row_label=lambda idx: f"{path}: line {_file_line(int(idx))}")
    logging.info("Read %d samples from %s", len(frame), path.name)
    return Dataset(frame)


def write_csv(d: Dataset, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = CSV_COLUMNS + [c for c in TAGS if c in d.frame.columns]
    d.frame.loc[:, columns].to_csv(
        path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding=ENCODING
    )
    return path


def write_quantile_csv(matrix: QuantileMatrix, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding=ENCODING)
    return path


def load_quantile_csv(path: Path | str) -> QuantileMatrix:
    """Inverse of :func:`write_quantile_csv`; the tau grid is read from the header."""
    path = Path(path)
    raw = _read_text_frame(path)
    ids = raw.pop("sample_id").to_numpy() if "sample_id" in raw.columns else None
    taus = []
    for column in raw.columns:
        if not column.startswith("q_"):
            raise DataError(f"{path}: unexpected column '{column}' in a quantile file")
        try:
            taus.append(float(column[2:]))
        except ValueError as exc:
            raise DataError(f"{path}: cannot read a tau level from '{column}'") from exc
    try:
        values = raw.to_numpy(dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric quantile cell ({exc})") from exc
    if ids is not None:
        try:
            ids = ids.astype(np.int64)
        except ValueError:
            pass
    try:
        return QuantileMatrix(values, TauGrid(tuple(taus)), ids)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


__all__ = ["load_csv", "load_quantile_csv", "write_csv", "write_quantile_csv"]
