"""Tau grids, quantile matrices and the simple (mean / median) combiners."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from ..distributions import PredictiveBatch, PredictiveDistribution, quantile_array
from ..errors import DomainError, ShapeError

DEFAULT_TAUS: tuple[float, ...] = (
    0.0125,
    0.025,
    0.050,
    0.075,
    0.100,
    0.200,
    0.300,
    0.400,
    0.500,
    0.600,
    0.700,
    0.800,
    0.900,
    0.925,
    0.950,
    0.975,
    0.9875,
)


@dataclass(frozen=True)
class TauGrid:
    levels: tuple[float, ...] = DEFAULT_TAUS

    def __post_init__(self) -> None:
        levels = tuple(float(t) for t in self.levels)
        if not levels:
            raise DomainError("A tau grid needs at least one level.")
        for tau in levels:
            if not (np.isfinite(tau) and 0.0 < tau < 1.0):
                raise DomainError(f"Quantile level {tau} is outside (0, 1).")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError("Quantile levels must be strictly increasing.")
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self) -> Iterator[float]:
        return iter(self.levels)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)

    def labels(self) -> list[str]:
        return [f"q_{tau!r}" for tau in self.levels]


@dataclass(frozen=True)
class QuantileMatrix:
    """Rows are samples, columns are tau levels."""

    values: np.ndarray
    grid: TauGrid = field(default_factory=TauGrid)
    ids: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.grid):
            raise ShapeError(f"Expected an (n, {len(self.grid)}) matrix, got {values.shape}.")
        if not np.all(np.isfinite(values)):
            raise DomainError("Quantile predictions must be finite.")
        if np.any(values < 0.0):
            raise DomainError("Quantile predictions must be >= 0.")
        object.__setattr__(self, "values", values)
        if self.ids is not None:
            ids = np.asarray(self.ids)
            if ids.shape != (values.shape[0],):
                raise ShapeError("ids must have one entry per row.")
            object.__setattr__(self, "ids", ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def is_noncrossing(self) -> bool:
        return bool(np.all(np.diff(self.values, axis=1) >= 0.0))

    def rearranged(self) -> "QuantileMatrix":
        return QuantileMatrix(rearrange_rows(self.values), self.grid, self.ids)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.grid.labels())
        if self.ids is not None:
            frame.insert(0, "sample_id", self.ids)
        return frame


def rearrange_noncrossing(row: Sequence[float]) -> list[float]:
    """Monotone rearrangement: the row's values sorted ascending."""
    arr = np.asarray(row, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Cannot rearrange non-finite quantiles.")
    return np.sort(arr).tolist()


def rearrange_rows(values: np.ndarray) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float), axis=1)


def extract_quantiles(
    preds: PredictiveBatch | Sequence[PredictiveDistribution],
    grid: TauGrid,
    ids: np.ndarray | None = None,
) -> QuantileMatrix:
    """Entry (i, j) is the tau_j quantile of prediction i."""
    batch = preds if isinstance(preds, PredictiveBatch) else PredictiveBatch.from_distributions(list(preds))
    taus = grid.as_array()[None, :]
    values = quantile_array(
        batch.family, taus, batch.mu[:, None], batch.sigma[:, None], batch.nu[:, None]
    )
    # per-row quantiles are monotone up to root-finding tolerance
    return QuantileMatrix(np.maximum.accumulate(values, axis=1), grid, ids)


def combine_simple(kind: str, inputs: Sequence[QuantileMatrix]) -> QuantileMatrix:
    """Entrywise mean or median of k >= 2 matrices, rows rearranged."""
    if len(inputs) < 2:
        raise ShapeError(f"Combining needs at least two matrices, got {len(inputs)}.")
    first = inputs[0]
    for other in inputs[1:]:
        if other.shape != first.shape or other.grid != first.grid:
            raise ShapeError(f"Matrix shapes differ: {first.shape} vs {other.shape}.")
    stack = np.stack([m.values for m in inputs])
    kind = str(kind).lower()
    if kind == "mean":
        combined = stack.mean(axis=0)
    elif kind == "median":
        combined = np.median(stack, axis=0)
    else:
        raise ShapeError(f"Unknown combiner kind '{kind}'. Expected mean or median.")
    return QuantileMatrix(rearrange_rows(combined), first.grid, first.ids)


__all__ = [
    "DEFAULT_TAUS",
    "QuantileMatrix",
    "TauGrid",
    "combine_simple",
    "extract_quantiles",
    "rearrange_noncrossing",
    "rearrange_rows",
]
