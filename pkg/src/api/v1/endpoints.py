"""Pydantic schemas for experiment configuration, run results and manifests."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ...distributions import Family
from ...ensemble.quantiles import DEFAULT_TAUS as GRID_TAUS
from ...ensemble.roster import ALGORITHM_IDS
from ...seeding import SEED_MAX

DEFAULT_TAUS: List[float] = list(GRID_TAUS)

N_COEFFICIENTS = 10  # intercept + 9 predictors

QUICK_N = 600
QUICK_TREES = 25
QUICK_KNOTS = 10


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SyntheticSpec(_Strict):
    """Generator settings; coefficients act on z-scored predictors."""

    n: int = Field(6000, ge=1)
    family: Family = Family.ZAGA
    beta_mu: List[float] = Field(
        default_factory=lambda: [math.log(60.0), 0.25, 0.1, 0.0, 0.0, 0.25, 0.1, 0.0, 0.0, -0.1]
    )
    beta_sigma: List[float] = Field(
        default_factory=lambda: [math.log(0.8), -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05]
    )
    beta_nu: List[float] = Field(
        default_factory=lambda: [math.log(0.15 / 0.85), -0.5, 0.0, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0, 0.0]
    )

    @field_validator("beta_mu", "beta_sigma", "beta_nu")
    @classmethod
    def _check_coefficients(cls, value: List[float]) -> List[float]:
        if len(value) != N_COEFFICIENTS:
            raise ValueError(f"expected {N_COEFFICIENTS} coefficients (intercept + 9 predictors), got {len(value)}")
        if not all(math.isfinite(v) for v in value):
            raise ValueError("coefficients must be finite")
        return value


class ForestConfig(_Strict):
    n_trees: int = Field(100, ge=1)
    mtry: int = Field(3, ge=1, le=9)
    min_leaf: int = Field(20, ge=1)
    max_depth: int = Field(30, ge=0)
    max_candidates: int = Field(64, ge=1)
    bootstrap: bool = True
    n_jobs: int = Field(1, ge=1)


class SplineConfig(_Strict):
    degree: int = Field(3, ge=0)
    n_interior_knots: int = Field(20, ge=0)
    penalty_order: int = Field(2, ge=0)
    lam: float = Field(1000.0, ge=0.0)


class FitControls(_Strict):
    max_outer: int = Field(200, ge=1)
    tol: float = Field(1e-8, gt=0.0)
    max_halvings: int = Field(20, ge=0)
    ridge: float = Field(1e-8, ge=0.0)


class QuantRegConfig(_Strict):
    fit_intercept: bool = True


class InputConfig(_Strict):
    csv: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None

    @model_validator(mode="before")
    @classmethod
    def _default_source(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("csv") and data.get("synthetic") is None:
            data = {**data, "synthetic": {}}
        return data

    @model_validator(mode="after")
    def _one_source(self) -> "InputConfig":
        if self.csv and self.synthetic is not None:
            raise ValueError("give either input.csv or input.synthetic, not both")
        return self


class ExperimentConfig(_Strict):
    input: InputConfig = Field(default_factory=InputConfig)
    seed: int = Field(0, ge=0, le=SEED_MAX)
    taus: List[float] = Field(default_factory=lambda: list(DEFAULT_TAUS))
    forest: ForestConfig = Field(default_factory=ForestConfig)
    splines: SplineConfig = Field(default_factory=SplineConfig)
    controls: FitControls = Field(default_factory=FitControls)
    quantreg: QuantRegConfig = Field(default_factory=QuantRegConfig)
    algorithms: List[str] = Field(default_factory=lambda: list(ALGORITHM_IDS))
    output_dir: str = "data/output/experiment"
    quick: bool = False

    @field_validator("taus")
    @classmethod
    def _check_taus(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one quantile level is required")
        for tau in value:
            if not (math.isfinite(tau) and 0.0 < tau < 1.0):
                raise ValueError(f"quantile level {tau} is outside (0, 1)")
        for a, b in zip(value, value[1:]):
            if not b > a:
                raise ValueError(f"quantile levels must be strictly increasing ({a} then {b})")
        return value

    @field_validator("algorithms")
    @classmethod
    def _check_algorithms(cls, value: List[str]) -> List[str]:
        unknown = [a for a in value if a not in ALGORITHM_IDS]
        if unknown:
            raise ValueError(f"unknown algorithm ids: {', '.join(unknown)}")
        if not value:
            raise ValueError("select at least one algorithm")
        # roster order, no duplicates
        return [a for a in ALGORITHM_IDS if a in set(value)]

    def apply_quick(self) -> "ExperimentConfig":
        """Smoke-mode settings: small synthetic data, fewer trees and knots."""
        update: Dict[str, Any] = {
            "quick": True,
            "forest": self.forest.model_copy(update={"n_trees": QUICK_TREES}),
            "splines": self.splines.model_copy(
                update={"n_interior_knots": min(self.splines.n_interior_knots, QUICK_KNOTS)}
            ),
        }
        if self.input.synthetic is not None:
            update["input"] = InputConfig(synthetic=self.input.synthetic.model_copy(update={"n": QUICK_N}))
        return self.model_copy(update=update)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


class ProcessResult(BaseModel):
    """High-level outcome of one CLI stage."""

    success: bool
    message: str
    output_path: Optional[str] = None
    row_count: int = 0
    metrics: Dict[str, Any] = Field(default_factory=dict)


class AlgorithmStatus(BaseModel):
    algorithm: str
    success: bool
    message: str = ""
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    config_hash: str
    software_version: str
    config: Dict[str, Any]
    stage_seconds: Dict[str, float] = Field(default_factory=dict)
    algorithm_status: Dict[str, AlgorithmStatus] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
    complete: bool = True
    started_at: Optional[str] = None
    completed_at: Optional[str] = None


__all__ = [
    "AlgorithmStatus",
    "ExperimentConfig",
    "FitControls",
    "ForestConfig",
    "InputConfig",
    "DEFAULT_TAUS",
    "ProcessResult",
    "QuantRegConfig",
    "RunManifest",
    "SplineConfig",
    "SyntheticSpec",
]
