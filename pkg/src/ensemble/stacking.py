"""Stacked generalization with one quantile-regression combiner per tau.

Bases are trained on set 1 and their set-2 quantiles train the combiners.
At prediction time the bases retrained on sets 1 and 2 supply the inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from ..dataset import Dataset
from ..distributions import PredictiveBatch
from ..errors import FitError, PreconditionError, ShapeError, ZadrError
from ..models.quantreg import QuantileRegModel, fit_qr, pinball_mean
from .quantiles import QuantileMatrix, TauGrid, extract_quantiles, rearrange_rows

STACK_FORMAT_VERSION = 1


class DistributionalModel(Protocol):
    def predict_batch(self, X) -> PredictiveBatch: ...


LearnerFitter = Callable[[str, Dataset], DistributionalModel]


@dataclass(frozen=True)
class StackedModel:
    base_ids: tuple[str, ...]
    combiners: tuple[QuantileRegModel, ...]
    grid: TauGrid
    train_loss: tuple[float, ...] = ()
    base_loss: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if len(self.combiners) != len(self.grid):
            raise ShapeError(f"{len(self.combiners)} combiners for {len(self.grid)} tau levels.")
        for tau, combiner in zip(self.grid, self.combiners):
            if combiner.n_inputs != len(self.base_ids):
                raise ShapeError(
                    f"Combiner at tau={tau} takes {combiner.n_inputs} columns, expected {len(self.base_ids)}."
                )
            if combiner.tau != tau:
                raise ShapeError(f"Combiner tau {combiner.tau} does not match grid level {tau}.")

    def to_dict(self) -> dict:
        return {
            "format_version": STACK_FORMAT_VERSION,
            "base_ids": list(self.base_ids),
            "taus": list(self.grid.levels),
            "combiners": [c.to_dict() for c in self.combiners],
            "train_loss": list(self.train_loss),
            "base_loss": [list(row) for row in self.base_loss],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "StackedModel":
        return cls(
            base_ids=tuple(payload["base_ids"]),
            combiners=tuple(QuantileRegModel.from_dict(c) for c in payload["combiners"]),
            grid=TauGrid(tuple(payload["taus"])),
            train_loss=tuple(payload.get("train_loss", ())),
            base_loss=tuple(tuple(row) for row in payload.get("base_loss", ())),
        )


def fit_combiners(
    base_ids: Sequence[str],
    base_matrices: Sequence[QuantileMatrix],
    y,
    grid: TauGrid,
    fit_intercept: bool = True,
) -> StackedModel:
    """One combiner per tau on the bases' tau-column; columns in base order."""
    if len(base_ids) != len(base_matrices):
        raise ShapeError("One quantile matrix per base learner is required.")
    y = np.asarray(y, dtype=float)
    for matrix in base_matrices:
        if matrix.shape != (y.shape[0], len(grid)):
            raise ShapeError(f"Base matrix shape {matrix.shape} does not match ({y.shape[0]}, {len(grid)}).")
    combiners, losses = [], []
    for j, tau in enumerate(grid):
        X = np.column_stack([m.column(j) for m in base_matrices])
        model = fit_qr(X, y, tau, fit_intercept=fit_intercept)
        combiners.append(model)
        losses.append(pinball_mean(model.raw_predict(X), y, tau))
    # rows follow base order, columns follow the grid
    base_loss = tuple(
        tuple(pinball_mean(m.column(j), y, tau) for j, tau in enumerate(grid)) for m in base_matrices
    )
    return StackedModel(tuple(base_ids), tuple(combiners), grid, tuple(losses), base_loss)


def apply_combiners(model: StackedModel, base_matrices: Sequence[QuantileMatrix]) -> QuantileMatrix:
    if len(base_matrices) != len(model.base_ids):
        raise ShapeError(f"Expected {len(model.base_ids)} base matrices, got {len(base_matrices)}.")
    n = len(base_matrices[0])
    out = np.empty((n, len(model.grid)))
    for j, combiner in enumerate(model.combiners):
        X = np.column_stack([m.column(j) for m in base_matrices])
        out[:, j] = combiner.predict(X)
    return QuantileMatrix(rearrange_rows(out), model.grid, base_matrices[0].ids)


def stack_fit(
    set1: Dataset,
    set2: Dataset,
    bases: Sequence[str],
    grid: TauGrid,
    fit_learner: LearnerFitter,
    fit_intercept: bool = True,
) -> StackedModel:
    """Train bases on set 1, then the per-tau combiners on set 2."""
    overlap = np.intersect1d(set1.ids, set2.ids)
    if overlap.size:
        raise PreconditionError(f"Stacking sets overlap in {overlap.size} samples.")
    matrices = []
    for base_id in bases:
        try:
            model = fit_learner(base_id, set1)
        except ZadrError as exc:
            raise FitError(f"Base learner failed: {exc}", base_id) from exc
        matrices.append(extract_quantiles(model.predict_batch(set2.X), grid, set2.ids))
    stacked = fit_combiners(bases, matrices, set2.y, grid, fit_intercept)
    logging.info("[stacking] fitted %d combiners over %s", len(stacked.combiners), ", ".join(bases))
    return stacked


def stack_predict(
    model: StackedModel,
    retrained: Mapping[str, DistributionalModel],
    X,
    ids: np.ndarray | None = None,
) -> QuantileMatrix:
    missing = [b for b in model.base_ids if b not in retrained]
    if missing:
        raise ShapeError(f"Retrained bases missing for: {', '.join(missing)}")
    matrices = [extract_quantiles(retrained[b].predict_batch(X), model.grid, ids) for b in model.base_ids]
    return apply_combiners(model, matrices)


__all__ = [
    "DistributionalModel",
    "LearnerFitter",
    "StackedModel",
    "apply_combiners",
    "fit_combiners",
    "stack_fit",
    "stack_predict",
]
