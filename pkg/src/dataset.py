"""Sample and Dataset containers.

A Dataset wraps a validated pandas frame (``target`` + 9 predictors, optional
``site_id`` / ``time_id`` tags). The frame index holds stable sample ids that
survive splitting and unions, which is how disjointness of sets is checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .distributions import Family, PredictiveBatch
from .errors import DataError, ShapeError
from .schema import PREDICTORS, TAGS, TARGET, validate_frame

TRUTH_COLUMNS = ["mu", "sigma", "nu"]


@dataclass(frozen=True)
class Sample:
    target: float
    predictors: tuple[float, ...]
    site_id: str | None = None
    time_id: str | None = None

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.predictors)
        if len(values) != len(PREDICTORS):
            raise ShapeError(f"A sample has {len(PREDICTORS)} predictors, got {len(values)}.")
        if not all(math.isfinite(v) for v in values):
            raise DataError("Sample predictors must be finite.")
        target = float(self.target)
        if not (math.isfinite(target) and target >= 0.0):
            raise DataError(f"Sample target must be finite and >= 0, got {target}.")
        object.__setattr__(self, "predictors", values)
        object.__setattr__(self, "target", target)


@dataclass(frozen=True)
class Dataset:
    frame: pd.DataFrame
    truth: pd.DataFrame | None = None
    truth_family: Family | None = None
    predictor_names: tuple[str, ...] = field(default=tuple(PREDICTORS))

    def __post_init__(self) -> None:
        frame = validate_frame(self.frame.copy())
        object.__setattr__(self, "frame", frame)
        if self.truth is not None:
            truth = self.truth.loc[:, TRUTH_COLUMNS].astype(float)
            if not truth.index.equals(frame.index):
                raise ShapeError("Truth parameters must align with the dataset index.")
            object.__setattr__(self, "truth", truth)
            object.__setattr__(self, "truth_family", Family.parse(self.truth_family or Family.ZAGA))

    def __len__(self) -> int:
        return int(self.frame.shape[0])

    @property
    def y(self) -> np.ndarray:
        return self.frame[TARGET].to_numpy(dtype=float)

    @property
    def X(self) -> np.ndarray:
        return self.frame[list(PREDICTORS)].to_numpy(dtype=float)

    @property
    def ids(self) -> np.ndarray:
        return self.frame.index.to_numpy()

    def take(self, positions: Sequence[int] | np.ndarray) -> "Dataset":
        """Subset by row position, keeping sample ids and truth."""
        pos = np.asarray(positions, dtype=int)
        truth = self.truth.iloc[pos] if self.truth is not None else None
        return Dataset(self.frame.iloc[pos], truth=truth, truth_family=self.truth_family)

    def union(self, other: "Dataset") -> "Dataset":
        if np.intersect1d(self.ids, other.ids).size:
            raise ShapeError("Datasets share sample ids; union expects disjoint sets.")
        truth = None
        if self.truth is not None and other.truth is not None:
            truth = pd.concat([self.truth, other.truth])
        return Dataset(pd.concat([self.frame, other.frame]), truth=truth, truth_family=self.truth_family)

    def samples(self) -> list[Sample]:
        tags = [c for c in TAGS if c in self.frame.columns]
        out: list[Sample] = []
        for record in self.frame.to_dict(orient="records"):
            out.append(
                Sample(
                    target=record[TARGET],
                    predictors=tuple(record[p] for p in PREDICTORS),
                    site_id=record.get("site_id") if "site_id" in tags else None,
                    time_id=record.get("time_id") if "time_id" in tags else None,
                )
            )
        return out

    def truth_batch(self) -> PredictiveBatch:
        """True generating distributions (synthetic datasets only)."""
        if self.truth is None:
            raise DataError("This dataset carries no true parameters.")
        return PredictiveBatch(
            self.truth_family,
            self.truth["mu"].to_numpy(),
            self.truth["sigma"].to_numpy(),
            self.truth["nu"].to_numpy(),
        )

    @classmethod
    def from_samples(cls, samples: Iterable[Sample]) -> "Dataset":
        rows = list(samples)
        if not rows:
            raise DataError("A dataset needs at least one sample.")
        data: dict[str, list] = {TARGET: [s.target for s in rows]}
        for j, name in enumerate(PREDICTORS):
            data[name] = [s.predictors[j] for s in rows]
        if any(s.site_id is not None or s.time_id is not None for s in rows):
            data["site_id"] = [s.site_id for s in rows]
            data["time_id"] = [s.time_id for s in rows]
        return cls(pd.DataFrame(data))

    @classmethod
    def from_arrays(cls, y, X, truth: pd.DataFrame | None = None, truth_family: Family | None = None) -> "Dataset":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(PREDICTORS):
            raise ShapeError(f"Expected an (n, {len(PREDICTORS)}) predictor array, got {X.shape}.")
        frame = pd.DataFrame(X, columns=list(PREDICTORS))
        frame.insert(0, TARGET, np.asarray(y, dtype=float))
        return cls(frame, truth=truth, truth_family=truth_family)

    def equals(self, other: "Dataset") -> bool:
        return self.frame.reset_index(drop=True).equals(other.frame.reset_index(drop=True))


__all__ = ["Dataset", "Sample", "TRUTH_COLUMNS"]
