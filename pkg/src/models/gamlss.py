"""Penalized maximum-likelihood GAMLSS for the zero-adjusted families.

Each of mu, sigma and nu gets its own linear predictor over the same design
(intercept plus standardized predictors, or intercept plus one P-spline block
per predictor) and is mapped through the log / log / logit links. Fitting
cycles through the three parameters and takes one Fisher-scoring step on the
linked scale for each, halving the step until the penalized log-likelihood
does not decrease.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence, Union

import numpy as np
from scipy.linalg import block_diag
from scipy.special import digamma, polygamma

from ..api.v1.endpoints import FitControls, SplineConfig
from ..dataset import Dataset
from ..distributions import (
    Family,
    PredictiveBatch,
    ZeroAdjustedParams,
    log_likelihood_array,
    safeguard_arrays,
)
from ..errors import FitError, ShapeError, SizeError
from ..links import LINKS
from ..mle import zero_adjusted_mle
from ..schema import PREDICTORS
from .splines import SplineBasisSpec, bspline_design

MODEL_FORMAT_VERSION = 1
PARAMETERS = ("mu", "sigma", "nu")
LINEAR = "linear"
SPLINES = "splines"


def _predictor_indices(names: Sequence[str]) -> list[int]:
    unknown = [n for n in names if n not in PREDICTORS]
    if unknown:
        raise ShapeError(f"Unknown predictors: {', '.join(unknown)}")
    return [PREDICTORS.index(n) for n in names]


def _check_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(PREDICTORS):
        raise ShapeError(f"Expected {len(PREDICTORS)} predictors per row, got {X.shape[1]}.")
    return X


@dataclass(frozen=True)
class _GamlssModel:
    family: Family
    predictors: tuple[str, ...]
    center: tuple[float, ...]
    scale: tuple[float, ...]
    beta_mu: np.ndarray
    beta_sigma: np.ndarray
    beta_nu: np.ndarray
    trace: tuple[float, ...] = ()
    converged: bool = True

    mode = LINEAR

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "predictors", tuple(self.predictors))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        width = self.design_width
        for name in PARAMETERS:
            beta = np.asarray(getattr(self, f"beta_{name}"), dtype=float)
            if beta.shape != (width,):
                raise ShapeError(f"beta_{name} has shape {beta.shape}, expected ({width},).")
            if not np.all(np.isfinite(beta)):
                raise FitError(f"beta_{name} contains non-finite coefficients.")
            object.__setattr__(self, f"beta_{name}", beta)

    @property
    def design_width(self) -> int:
        return 1 + len(self.predictors)

    def coefficients(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, f"beta_{name}") for name in PARAMETERS}

    def standardized(self, X) -> np.ndarray:
        X = _check_rows(X)
        cols = X[:, _predictor_indices(self.predictors)]
        return (cols - np.asarray(self.center)) / np.asarray(self.scale)

    def design(self, X) -> np.ndarray:
        S = self.standardized(X)
        return np.column_stack([np.ones(S.shape[0]), S])

    def predict_batch(self, X) -> PredictiveBatch:
        Z = self.design(X)
        raw = [LINKS[name].inverse(Z @ getattr(self, f"beta_{name}")) for name in PARAMETERS]
        mu, sigma, nu = safeguard_arrays(*raw)
        return PredictiveBatch(self.family, mu, sigma, nu)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "gamlss",
            "mode": self.mode,
            "family": self.family.value,
            "predictors": list(self.predictors),
            "center": list(self.center),
            "scale": list(self.scale),
            "coefficients": {name: beta.tolist() for name, beta in self.coefficients().items()},
            "trace": list(self.trace),
            "converged": self.converged,
        }


@dataclass(frozen=True)
class LinearGamlssModel(_GamlssModel):
    """Linear predictors on z-scored predictors."""

    mode = LINEAR


@dataclass(frozen=True)
class SplineGamlssModel(_GamlssModel):
    """One P-spline smooth per predictor plus a shared intercept."""

    bases: tuple[SplineBasisSpec, ...] = field(default_factory=tuple)

    mode = SPLINES

    def __post_init__(self) -> None:
        if len(self.bases) != len(self.predictors):
            raise ShapeError(f"{len(self.bases)} spline bases for {len(self.predictors)} predictors.")
        super().__post_init__()

    @property
    def design_width(self) -> int:
        return 1 + sum(spec.size for spec in self.bases)

    def design(self, X) -> np.ndarray:
        S = self.standardized(X)
        blocks = [np.ones((S.shape[0], 1))]
        blocks += [bspline_design(S[:, j], spec) for j, spec in enumerate(self.bases)]
        return np.hstack(blocks)

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["bases"] = [spec.to_dict() for spec in self.bases]
        return payload


GamlssModel = Union[LinearGamlssModel, SplineGamlssModel]


def gamlss_from_dict(payload: dict) -> GamlssModel:
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ShapeError(f"Unsupported GAMLSS model format version: {version}")
    coefs = payload["coefficients"]
    common = dict(
        family=Family.parse(payload["family"]),
        predictors=tuple(payload["predictors"]),
        center=tuple(payload["center"]),
        scale=tuple(payload["scale"]),
        beta_mu=np.asarray(coefs["mu"], dtype=float),
        beta_sigma=np.asarray(coefs["sigma"], dtype=float),
        beta_nu=np.asarray(coefs["nu"], dtype=float),
        trace=tuple(payload.get("trace", ())),
        converged=bool(payload.get("converged", True)),
    )
    if payload.get("mode") == SPLINES:
        bases = tuple(SplineBasisSpec.from_dict(b) for b in payload["bases"])
        return SplineGamlssModel(bases=bases, **common)
    return LinearGamlssModel(**common)


def predict_params(model: GamlssModel, x: Sequence[float]) -> ZeroAdjustedParams:
    row = np.asarray(x, dtype=float)
    if row.ndim != 1 or row.shape[0] != len(PREDICTORS):
        raise ShapeError(f"Expected a row of {len(PREDICTORS)} predictors, got shape {row.shape}.")
    return model.predict_batch(row[None, :])[0].params


# --- fitting ------------------------------------------------------------


class GamlssProblem:
    """Penalized log-likelihood of one design, with per-parameter scores.

    ``betas`` maps each of mu / sigma / nu to a coefficient vector over the
    columns of ``Z``; ``penalty`` is shared by all three.
    """

    def __init__(self, family: Family, y: np.ndarray, Z: np.ndarray, penalty: np.ndarray) -> None:
        self.family = Family.parse(family)
        self.y = np.asarray(y, dtype=float)
        self.Z = np.asarray(Z, dtype=float)
        self.penalty = np.asarray(penalty, dtype=float)
        self.positive = self.y > 0.0
        self.zero = ~self.positive
        self._y_safe = np.where(self.positive, self.y, 1.0)

    def parameters(self, betas: Dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raw = [LINKS[name].inverse(self.Z @ betas[name]) for name in PARAMETERS]
        return safeguard_arrays(*raw)

    def loglik(self, betas: Dict[str, np.ndarray]) -> float:
        mu, sigma, nu = self.parameters(betas)
        return float(np.sum(log_likelihood_array(self.family, self.y, mu, sigma, nu)))

    def penalty_term(self, betas: Dict[str, np.ndarray]) -> float:
        return float(sum(0.5 * betas[name] @ self.penalty @ betas[name] for name in PARAMETERS))

    def objective(self, betas: Dict[str, np.ndarray]) -> float:
        return self.loglik(betas) - self.penalty_term(betas)

    def score_and_information(self, name: str, betas: Dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """Per-row score and expected information with respect to eta_name."""
        mu, sigma, nu = self.parameters(betas)
        pos = self.positive.astype(float)
        y = self._y_safe
        s2 = sigma**2
        if name == "nu":
            return self.zero.astype(float) - nu, nu * (1.0 - nu)
        if self.family is Family.ZAGA:
            a = 1.0 / s2
            if name == "mu":
                return pos * a * (y - mu) / mu, pos * a
            score = -2.0 * a * (np.log(y / mu) - y / mu + 1.0 + np.log(a) - digamma(a))
            info = 4.0 * a * (a * polygamma(1, a) - 1.0)
            return pos * score, pos * info
        if name == "mu":
            return pos * (y - mu) / (s2 * mu**2), pos / (s2 * mu)
        q = (y - mu) ** 2 / (mu**2 * y)
        return pos * (q / s2 - 1.0), pos * 2.0

    def gradient(self, name: str, betas: Dict[str, np.ndarray]) -> np.ndarray:
        score, _ = self.score_and_information(name, betas)
        return self.Z.T @ score - self.penalty @ betas[name]

    def newton_step(
        self,
        name: str,
        betas: Dict[str, np.ndarray],
        current: float,
        controls: FitControls,
        learner_id: str | None = None,
    ) -> tuple[Dict[str, np.ndarray], float]:
        score, info = self.score_and_information(name, betas)
        width = self.Z.shape[1]
        hessian = self.Z.T @ (info[:, None] * self.Z) + self.penalty + controls.ridge * np.eye(width)
        grad = self.Z.T @ score - self.penalty @ betas[name]
        try:
            delta = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            bump = max(controls.ridge, 1e-8) * max(1.0, float(np.mean(np.abs(np.diag(hessian)))))
            logging.warning("[%s] singular %s Hessian; retrying with ridge %.3g", learner_id or "gamlss", name, bump)
            try:
                delta = np.linalg.solve(hessian + bump * np.eye(width), grad)
            except np.linalg.LinAlgError as exc:
                raise FitError(f"Singular Hessian for {name} after ridge fallback.", learner_id) from exc
        if not np.all(np.isfinite(delta)):
            raise FitError(f"Non-finite Newton step for {name}.", learner_id)

        step = 1.0
        for _ in range(controls.max_halvings + 1):
            candidate = dict(betas)
            candidate[name] = betas[name] + step * delta
            value = self.objective(candidate)
            if np.isfinite(value) and value >= current:
                return candidate, value
            step *= 0.5
        return betas, current


@dataclass(frozen=True)
class _Design:
    predictors: tuple[str, ...]
    center: np.ndarray
    scale: np.ndarray
    Z: np.ndarray
    penalty: np.ndarray
    bases: tuple[SplineBasisSpec, ...] = ()


def _build_design(X: np.ndarray, names: Sequence[str], mode: str, splines: SplineConfig) -> _Design:
    cols = X[:, _predictor_indices(names)]
    center = cols.mean(axis=0) if cols.shape[1] else np.zeros(0)
    scale = cols.std(axis=0) if cols.shape[1] else np.zeros(0)
    scale = np.where(scale > 0.0, scale, 1.0)
    S = (cols - center) / scale
    if mode == LINEAR:
        Z = np.column_stack([np.ones(S.shape[0]), S])
        return _Design(tuple(names), center, scale, Z, np.zeros((Z.shape[1], Z.shape[1])))

    bases = tuple(
        SplineBasisSpec.from_range(
            S[:, j].min(),
            S[:, j].max(),
            n_interior=splines.n_interior_knots,
            degree=splines.degree,
            penalty_order=splines.penalty_order,
            lam=splines.lam,
        )
        for j in range(S.shape[1])
    )
    blocks = [np.ones((S.shape[0], 1))] + [bspline_design(S[:, j], spec) for j, spec in enumerate(bases)]
    # each block's rows sum to 1, so a sum-to-zero penalty keeps it apart from the intercept
    penalties = [np.zeros((1, 1))] + [spec.penalty() + np.ones((spec.size, spec.size)) for spec in bases]
    return _Design(tuple(names), center, scale, np.hstack(blocks), block_diag(*penalties), bases)


def fit_gamlss(
    d: Dataset,
    family: Family | str,
    mode: str = LINEAR,
    splines: SplineConfig | None = None,
    controls: FitControls | None = None,
    predictors: Sequence[str] | None = None,
    learner_id: str | None = None,
) -> GamlssModel:
    """Fit a linear or P-spline GAMLSS by cyclic penalized Fisher scoring.

    ``predictors`` selects a subset of the nine predictors (an empty list
    gives an intercept-only model). The returned model's ``trace`` is the
    penalized log-likelihood after each outer iteration.
    """
    family = Family.parse(family)
    if mode not in (LINEAR, SPLINES):
        raise ShapeError(f"Unknown GAMLSS mode '{mode}'. Expected linear or splines.")
    splines = splines or SplineConfig()
    controls = controls or FitControls()
    names = tuple(PREDICTORS if predictors is None else predictors)

    design = _build_design(d.X, names, mode, splines)
    n, width = design.Z.shape
    if n < width:
        raise SizeError(f"{n} samples cannot identify {width} coefficients per parameter.")

    start = zero_adjusted_mle(family, d.y)
    betas: Dict[str, np.ndarray] = {}
    for name in PARAMETERS:
        beta = np.zeros(width)
        beta[0] = float(LINKS[name].link(getattr(start, name)))
        betas[name] = beta

    problem = GamlssProblem(family, d.y, design.Z, design.penalty)
    current = problem.objective(betas)
    if not np.isfinite(current):
        raise FitError("Non-finite objective at the starting values.", learner_id)

    trace = [current]
    converged = False
    for _ in range(controls.max_outer):
        for name in PARAMETERS:
            betas, current = problem.newton_step(name, betas, current, controls, learner_id)
        if not np.isfinite(current):
            raise FitError("Objective became non-finite.", learner_id)
        trace.append(current)
        if trace[-1] - trace[-2] < controls.tol * max(1.0, abs(trace[-1])):
            converged = True
            break
    if not converged:
        logging.warning("[%s] stopped after %d outer iterations", learner_id or "gamlss", controls.max_outer)
    logging.info(
        "[%s] %s %s fit: %d iterations, penalized log-likelihood %.6g",
        learner_id or "gamlss",
        mode,
        family.value,
        len(trace) - 1,
        current,
    )

    common = dict(
        family=family,
        predictors=design.predictors,
        center=tuple(design.center.tolist()),
        scale=tuple(design.scale.tolist()),
        beta_mu=betas["mu"],
        beta_sigma=betas["sigma"],
        beta_nu=betas["nu"],
        trace=tuple(trace),
        converged=converged,
    )
    if mode == SPLINES:
        return SplineGamlssModel(bases=design.bases, **common)
    return LinearGamlssModel(**common)


__all__ = [
    "GamlssModel",
    "GamlssProblem",
    "LinearGamlssModel",
    "SplineGamlssModel",
    "fit_gamlss",
    "gamlss_from_dict",
    "predict_params",
]
