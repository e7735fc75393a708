"""Stage functions for the experiment protocol.

This module handles the individual steps:
1. Loading the input (CSV or synthetic generator)
2. Splitting it into three sets
3. Fitting, saving and loading single models
4. Predicting quantile matrices
5. Evaluating matrices against a test set
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .api.v1.endpoints import ExperimentConfig
from .dataset import Dataset
from .ensemble.quantiles import QuantileMatrix, TauGrid, extract_quantiles
from .ensemble.runner import STAGE_FULL, fit_learner
from .ensemble.stacking import DistributionalModel
from .errors import ConfigError, DataError
from .metrics import EvaluationReport, evaluate
from .models.forest import DistForest
from .models.gamlss import gamlss_from_dict
from .services.io import load_csv
from .services.splitting import ThreeWaySplit, split_three_way
from .services.synthetic import generate_synthetic


def load_input(config: ExperimentConfig) -> Dataset:
    """Read the configured CSV or draw the configured synthetic dataset."""
    if config.input.csv:
        return load_csv(config.input.csv)
    if config.input.synthetic is None:
        raise ConfigError("No input source configured.")
    return generate_synthetic(config.input.synthetic, config.seed)


def split(d: Dataset, config: ExperimentConfig) -> ThreeWaySplit:
    parts = split_three_way(d, config.seed)
    logging.info("Split %d samples into sets of %s", len(d), parts.sizes)
    return parts


def grid_from(config: ExperimentConfig) -> TauGrid:
    return TauGrid(tuple(config.taus))


def fit_model(d: Dataset, learner_id: str, config: ExperimentConfig) -> DistributionalModel:
    """Fit one individual learner on the whole dataset."""
    return fit_learner(learner_id, d, config, STAGE_FULL)


def save_model(model: DistributionalModel, path: Path | str, learner_id: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = model.to_dict()
    if learner_id:
        payload["learner_id"] = learner_id
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def load_model(path: Path | str) -> DistributionalModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a JSON model document ({exc})") from exc
    kind = payload.get("kind")
    if kind == "forest":
        return DistForest.from_dict(payload)
    if kind == "gamlss":
        return gamlss_from_dict(payload)
    raise DataError(f"{path}: unknown model kind '{kind}'")


def predict_quantiles(model: DistributionalModel, d: Dataset, grid: TauGrid) -> QuantileMatrix:
    return extract_quantiles(model.predict_batch(d.X), grid, d.ids)


def evaluate_matrices(
    matrices: dict[str, QuantileMatrix],
    test: Dataset,
    train: Dataset,
    grid: TauGrid,
    order: list[str] | None = None,
) -> EvaluationReport:
    report = evaluate(matrices, test.y, train.y, grid, order=order)
    logging.info("Evaluated %d algorithms on %d test samples", len(report.algorithms), len(test))
    return report


__all__ = [
    "evaluate_matrices",
    "fit_model",
    "grid_from",
    "load_input",
    "load_model",
    "predict_quantiles",
    "save_model",
    "split",
]
