"""Dataset contract validation using pandera.

Every Dataset goes through ``DatasetSchema`` on construction, so fitted
models can assume finite predictors and non-negative targets.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
import pandera as pa

from .errors import DataError

TARGET = "target"
PREDICTORS = [
    "pr_p1",
    "pr_p2",
    "pr_p3",
    "pr_p4",
    "pr_i1",
    "pr_i2",
    "pr_i3",
    "pr_i4",
    "elevation",
]
TAGS = ["site_id", "time_id"]
CSV_COLUMNS = [TARGET, *PREDICTORS]

_finite = pa.Check(lambda s: np.isfinite(s), error="finite")

DatasetSchema = pa.DataFrameSchema(
    {
        TARGET: pa.Column(float, checks=[pa.Check.ge(0.0), _finite], coerce=True, nullable=False),
        **{name: pa.Column(float, checks=[_finite], coerce=True, nullable=False) for name in PREDICTORS},
        "site_id": pa.Column(str, nullable=True, required=False),
        "time_id": pa.Column(str, nullable=True, required=False),
    },
    strict=True,
)


def _describe_failures(failures: pd.DataFrame, row_label) -> str:
    lines: list[str] = []
    for record in failures.to_dict(orient="records"):
        column = record.get("column") or record.get("schema_context")
        check = record.get("check")
        index = record.get("index")
        where = row_label(index) if index is not None and not pd.isna(index) else "schema"
        lines.append(f"{where}: column '{column}' failed {check} (value {record.get('failure_case')!r})")
    return "; ".join(lines[:20]) + (f"; ... {len(lines) - 20} more" if len(lines) > 20 else "")


def validate_frame(frame: pd.DataFrame, row_label=None) -> pd.DataFrame:
    """Validate against the dataset contract; raise DataError naming the rows."""
    label = row_label or (lambda idx: f"row {idx}")
    try:
        return DatasetSchema.validate(frame, lazy=True)
    except pa.errors.SchemaErrors as exc:
        detail = _describe_failures(exc.failure_cases, label) if exc.failure_cases is not None else str(exc)
        raise DataError(f"Dataset contract violated: {detail}") from exc


__all__ = ["CSV_COLUMNS", "DatasetSchema", "PREDICTORS", "TAGS", "TARGET", "validate_frame"]
