"""Evaluation of quantile predictions against a climatology reference.

Per-level skill uses the median over samples of the pinball loss; the
scoring-rule skill uses the mean over samples of the loss summed across
levels. Both compare against the training-set quantile predicted for every
test sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .ensemble.quantiles import QuantileMatrix, TauGrid
from .errors import DomainError, ShapeError, SizeError


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (math.isfinite(tau) and 0.0 < tau < 1.0):
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    return tau


def _pair(z, y) -> tuple[np.ndarray, np.ndarray]:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if z.shape != y.shape:
        raise ShapeError(f"{z.shape[0]} predictions but {y.shape[0]} observations.")
    if z.shape[0] == 0:
        raise SizeError("At least one observation is required.")
    return z, y


def quantile_loss(z, y, tau: float):
    """Pinball loss ``(z - y) * (1[z >= y] - tau)``; scalar in, scalar out."""
    tau = _check_tau(tau)
    diff = np.asarray(z, dtype=float) - np.asarray(y, dtype=float)
    loss = diff * ((diff >= 0.0) - tau)
    return float(loss) if np.ndim(loss) == 0 else loss


def median_quantile_score(z, y, tau: float) -> float:
    z, y = _pair(z, y)
    return float(np.median(quantile_loss(z, y, tau)))


def skill(score_alg: float, score_ref: float) -> float:
    """``1 - score_alg / score_ref``; NaN marks an undefined skill (zero reference)."""
    if score_ref < 0.0 or score_alg < 0.0:
        raise DomainError("Scores must be non-negative.")
    if score_ref == 0.0:
        return math.nan
    return 1.0 - score_alg / score_ref


def reference_quantiles(train_targets, grid: TauGrid) -> np.ndarray:
    """Inverse empirical CDF: the smallest order statistic whose ECDF reaches tau."""
    y = np.sort(np.asarray(train_targets, dtype=float))
    n = y.shape[0]
    if n == 0:
        raise SizeError("Reference quantiles need at least one training target.")
    ecdf = np.arange(1, n + 1) / n
    idx = np.searchsorted(ecdf, grid.as_array(), side="left")
    return y[np.minimum(idx, n - 1)]


def scoring_rule_per_sample(row, y: float, grid: TauGrid) -> float:
    row = np.asarray(row, dtype=float)
    if row.shape != (len(grid),):
        raise ShapeError(f"Row has {row.shape} entries for {len(grid)} levels.")
    return float(sum(quantile_loss(z, y, tau) for z, tau in zip(row, grid)))


def scoring_sums(values: np.ndarray, y, grid: TauGrid) -> np.ndarray:
    """Per-sample sum of pinball losses over the grid, for an (n, k) matrix."""
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=float)
    if values.shape != (y.shape[0], len(grid)):
        raise ShapeError(f"Matrix shape {values.shape} does not match ({y.shape[0]}, {len(grid)}).")
    diff = values - y[:, None]
    return np.sum(diff * ((diff >= 0.0) - grid.as_array()[None, :]), axis=1)


def scoring_rule_skill(alg_matrix: QuantileMatrix, ref_row, y) -> float:
    y = np.asarray(y, dtype=float)
    ref = np.broadcast_to(np.asarray(ref_row, dtype=float), alg_matrix.shape)
    alg_mean = float(np.mean(scoring_sums(alg_matrix.values, y, alg_matrix.grid)))
    ref_mean = float(np.mean(scoring_sums(ref, y, alg_matrix.grid)))
    return skill(alg_mean, ref_mean)


def coverage(pred_column, y) -> float:
    """Fraction of observations not exceeding the prediction."""
    z, y = _pair(pred_column, y)
    return float(np.mean(y <= z))


def rank_table(skills) -> np.ndarray:
    """Per column, rank 1 for the highest skill; ties averaged, NaN left unranked."""
    skills = np.asarray(skills, dtype=float)
    if skills.ndim != 2:
        raise ShapeError("Skills must be an (algorithms, levels) matrix.")
    ranks = np.full(skills.shape, np.nan)
    for j in range(skills.shape[1]):
        ok = np.isfinite(skills[:, j])
        if np.any(ok):
            ranks[ok, j] = rankdata(-skills[ok, j], method="average")
    return ranks


@dataclass
class EvaluationReport:
    algorithms: List[str]
    grid: TauGrid
    reference: np.ndarray
    scoring_rule_skill: Dict[str, float] = field(default_factory=dict)
    quantile_skill: Dict[str, np.ndarray] = field(default_factory=dict)
    ranks: Dict[str, np.ndarray] = field(default_factory=dict)
    coverage: Dict[str, np.ndarray] = field(default_factory=dict)
    n_test: int = 0

    def undefined_skills(self) -> Dict[str, List[float]]:
        return {
            a: [tau for tau, s in zip(self.grid, self.quantile_skill[a]) if not math.isfinite(s)]
            for a in self.algorithms
            if not np.all(np.isfinite(self.quantile_skill[a]))
        }

    def fig5_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"algorithm": self.algorithms, "scoring_rule_skill": [self.scoring_rule_skill[a] for a in self.algorithms]}
        )

    def fig6_frame(self) -> pd.DataFrame:
        records = []
        for a in self.algorithms:
            for j, tau in enumerate(self.grid):
                records.append(
                    {"algorithm": a, "tau": tau, "skill": self.quantile_skill[a][j], "rank": self.ranks[a][j]}
                )
        return pd.DataFrame.from_records(records, columns=["algorithm", "tau", "skill", "rank"])

    def fig7_frame(self) -> pd.DataFrame:
        records = [
            {"algorithm": a, "tau": tau, "coverage": self.coverage[a][j]}
            for a in self.algorithms
            for j, tau in enumerate(self.grid)
        ]
        return pd.DataFrame.from_records(records, columns=["algorithm", "tau", "coverage"])

    def to_dict(self) -> dict:
        def clean(values) -> list:
            return [None if not math.isfinite(v) else float(v) for v in np.asarray(values, dtype=float)]

        return {
            "algorithms": list(self.algorithms),
            "taus": list(self.grid.levels),
            "n_test": self.n_test,
            "reference_quantiles": clean(self.reference),
            "scoring_rule_skill": {a: clean([self.scoring_rule_skill[a]])[0] for a in self.algorithms},
            "quantile_skill": {a: clean(self.quantile_skill[a]) for a in self.algorithms},
            "ranks": {a: clean(self.ranks[a]) for a in self.algorithms},
            "coverage": {a: clean(self.coverage[a]) for a in self.algorithms},
            "undefined_skill": self.undefined_skills(),
        }


def evaluate(
    matrices: Mapping[str, QuantileMatrix],
    y_test,
    train_targets,
    grid: TauGrid,
    order: Sequence[str] | None = None,
) -> EvaluationReport:
    """Skill, rank and coverage tables for every algorithm in ``matrices``."""
    y = np.asarray(y_test, dtype=float)
    algorithms = [a for a in (order or list(matrices)) if a in matrices]
    reference = reference_quantiles(train_targets, grid)
    ref_matrix = np.broadcast_to(reference, (y.shape[0], len(grid)))
    ref_scores = [median_quantile_score(ref_matrix[:, j], y, tau) for j, tau in enumerate(grid)]

    report = EvaluationReport(algorithms=algorithms, grid=grid, reference=reference, n_test=int(y.shape[0]))
    for a in algorithms:
        m = matrices[a]
        if m.grid != grid or len(m) != y.shape[0]:
            raise ShapeError(f"[{a}] matrix shape {m.shape} does not match {y.shape[0]} test samples.")
        report.scoring_rule_skill[a] = scoring_rule_skill(m, reference, y)
        report.quantile_skill[a] = np.array(
            [skill(median_quantile_score(m.column(j), y, tau), ref_scores[j]) for j, tau in enumerate(grid)]
        )
        report.coverage[a] = np.array([coverage(m.column(j), y) for j in range(len(grid))])
    ranks = rank_table(np.vstack([report.quantile_skill[a] for a in algorithms])) if algorithms else np.zeros((0, 0))
    for i, a in enumerate(algorithms):
        report.ranks[a] = ranks[i]
    return report


__all__ = [
    "EvaluationReport",
    "coverage",
    "evaluate",
    "median_quantile_score",
    "quantile_loss",
    "rank_table",
    "reference_quantiles",
    "scoring_rule_per_sample",
    "scoring_rule_skill",
    "scoring_sums",
    "skill",
]
