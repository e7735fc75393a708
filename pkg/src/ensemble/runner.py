"""Runs the 17-algorithm protocol on a three-way split.

1. Base learners are fit on set 1 and predict set 2; combiners are trained there.
2. Base learners and the two linear benchmarks are refit on sets 1 and 2.
3. Every algorithm produces a set-3 quantile matrix.

A failing learner is recorded and only the algorithms that need it fail.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict

from ..api.v1.endpoints import AlgorithmStatus, ExperimentConfig
from ..dataset import Dataset
from ..errors import FitError, ZadrError
from ..models.forest import fit_forest
from ..models.gamlss import LINEAR, SPLINES, fit_gamlss
from ..seeding import derive_seed
from ..services.splitting import ThreeWaySplit
from .quantiles import QuantileMatrix, TauGrid, combine_simple, extract_quantiles
from .roster import AlgorithmKind, ModelType, get_algorithm, get_learner, required_learners
from .stacking import DistributionalModel, StackedModel, stack_fit, stack_predict

STAGE_TRAIN = "set1"
STAGE_FULL = "set1+set2"


def fit_learner(learner_id: str, train: Dataset, config: ExperimentConfig, stage: str) -> DistributionalModel:
    """Fit one individual learner; forests draw their seed from (master, id, stage)."""
    spec = get_learner(learner_id)
    if spec.model is ModelType.FOREST:
        seed = derive_seed(config.seed, "forest", learner_id, stage)
        return fit_forest(train, spec.family, config.forest, seed=seed, learner_id=learner_id)
    mode = SPLINES if spec.model is ModelType.GAMLSS_SPLINES else LINEAR
    return fit_gamlss(
        train,
        spec.family,
        mode=mode,
        splines=config.splines,
        controls=config.controls,
        learner_id=learner_id,
    )


def _learner_diagnostics(model) -> dict:
    diag: dict = {}
    trace = getattr(model, "trace", None)
    if trace:
        diag["iterations"] = len(trace) - 1
        diag["objective"] = trace[-1]
        diag["converged"] = bool(getattr(model, "converged", True))
    if hasattr(model, "trees"):
        diag["n_trees"] = len(model.trees)
        diag["mean_leaves"] = sum(t.n_leaves for t in model.trees) / len(model.trees)
    return diag


@dataclass
class RunOutput:
    matrices: Dict[str, QuantileMatrix] = field(default_factory=dict)
    status: Dict[str, AlgorithmStatus] = field(default_factory=dict)
    stacked: Dict[str, StackedModel] = field(default_factory=dict)
    learner_diagnostics: Dict[str, dict] = field(default_factory=dict)
    seconds: Dict[str, float] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return all(s.success for s in self.status.values())


class _LearnerCache:
    """Memoised fits per (stage, learner); failures are remembered too."""

    def __init__(self, config: ExperimentConfig, output: RunOutput) -> None:
        self.config = config
        self.output = output
        self.models: Dict[tuple[str, str], DistributionalModel] = {}
        self.errors: Dict[tuple[str, str], Exception] = {}

    def get(self, learner_id: str, train: Dataset, stage: str) -> DistributionalModel:
        key = (stage, learner_id)
        if key in self.errors:
            raise self.errors[key]
        if key not in self.models:
            started = time.perf_counter()
            try:
                model = fit_learner(learner_id, train, self.config, stage)
            except (ZadrError, ArithmeticError, ValueError) as exc:
                err = exc if isinstance(exc, FitError) else FitError(str(exc), learner_id)
                logging.error("[%s] fit on %s failed: %s", learner_id, stage, exc)
                self.errors[key] = err
                raise err from exc
            self.models[key] = model
            self.output.seconds[f"fit {learner_id} ({stage})"] = time.perf_counter() - started
            self.output.learner_diagnostics[f"{learner_id} ({stage})"] = _learner_diagnostics(model)
        return self.models[key]


def run_all_algorithms(split: ThreeWaySplit, grid: TauGrid, config: ExperimentConfig) -> RunOutput:
    output = RunOutput()
    cache = _LearnerCache(config, output)
    full = split.training()
    test = split.set3
    test_quantiles: Dict[str, QuantileMatrix] = {}

    def full_matrix(learner_id: str) -> QuantileMatrix:
        if learner_id not in test_quantiles:
            model = cache.get(learner_id, full, STAGE_FULL)
            test_quantiles[learner_id] = extract_quantiles(model.predict_batch(test.X), grid, test.ids)
        return test_quantiles[learner_id]

    logging.info(
        "Running %d algorithms (%d learners) on split sizes %s",
        len(config.algorithms),
        len(required_learners(config.algorithms)),
        split.sizes,
    )
    for algorithm_id in config.algorithms:
        spec = get_algorithm(algorithm_id)
        started = time.perf_counter()
        try:
            if spec.kind is AlgorithmKind.INDIVIDUAL:
                matrix = full_matrix(spec.id)
            elif spec.kind in (AlgorithmKind.MEAN, AlgorithmKind.MEDIAN):
                matrix = combine_simple(spec.kind.value, [full_matrix(b) for b in spec.bases])
            else:
                stacked = stack_fit(
                    split.set1,
                    split.set2,
                    spec.bases,
                    grid,
                    lambda base_id, train: cache.get(base_id, train, STAGE_TRAIN),
                    fit_intercept=config.quantreg.fit_intercept,
                )
                retrained = {b: cache.get(b, full, STAGE_FULL) for b in spec.bases}
                matrix = stack_predict(stacked, retrained, test.X, test.ids)
                output.stacked[algorithm_id] = stacked
        except (ZadrError, ArithmeticError, ValueError) as exc:
            logging.error("[%s] failed: %s", algorithm_id, exc)
            output.status[algorithm_id] = AlgorithmStatus(algorithm=algorithm_id, success=False, message=str(exc))
            continue
        output.matrices[algorithm_id] = matrix
        output.status[algorithm_id] = AlgorithmStatus(
            algorithm=algorithm_id,
            success=True,
            diagnostics={"rows": len(matrix), "columns": len(grid)},
        )
        output.seconds[algorithm_id] = time.perf_counter() - started
    failed = [a for a, s in output.status.items() if not s.success]
    if failed:
        logging.warning("%d of %d algorithms failed: %s", len(failed), len(config.algorithms), ", ".join(failed))
    return output


__all__ = ["RunOutput", "STAGE_FULL", "STAGE_TRAIN", "fit_learner", "run_all_algorithms"]
