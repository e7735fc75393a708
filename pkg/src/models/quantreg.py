"""Linear quantile regression solved exactly as a linear program.

Variables are ``[beta, u, v]`` with ``X beta + u - v = y`` and ``u, v >= 0``;
the objective ``tau * sum(u) + (1 - tau) * sum(v)`` is n times the mean
pinball loss. HiGHS dual simplex returns a vertex solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import linprog

from ..errors import DomainError, FitError, ShapeError, SizeError


@dataclass(frozen=True)
class QuantileRegModel:
    tau: float
    intercept: float
    coefficients: tuple[float, ...]
    fit_intercept: bool = True
    dropped: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        coefs = tuple(float(c) for c in self.coefficients)
        if not (0.0 < float(self.tau) < 1.0):
            raise DomainError(f"tau must lie in (0, 1), got {self.tau}")
        if not (np.isfinite(self.intercept) and all(np.isfinite(c) for c in coefs)):
            raise FitError("Quantile regression coefficients must be finite.")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "dropped", tuple(int(i) for i in self.dropped))

    @property
    def n_inputs(self) -> int:
        return len(self.coefficients)

    def raw_predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_inputs:
            raise ShapeError(f"Combiner expects {self.n_inputs} columns, got {X.shape[1]}.")
        return X @ np.asarray(self.coefficients) + self.intercept

    def predict(self, X) -> np.ndarray:
        """Affine combination clamped at 0."""
        return np.maximum(self.raw_predict(X), 0.0)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "intercept": self.intercept,
            "coefficients": list(self.coefficients),
            "fit_intercept": self.fit_intercept,
            "dropped": list(self.dropped),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "QuantileRegModel":
        return cls(
            tau=float(payload["tau"]),
            intercept=float(payload["intercept"]),
            coefficients=tuple(payload["coefficients"]),
            fit_intercept=bool(payload.get("fit_intercept", True)),
            dropped=tuple(payload.get("dropped", ())),
        )


def pinball_mean(pred, y, tau: float) -> float:
    diff = np.asarray(pred, dtype=float) - np.asarray(y, dtype=float)
    return float(np.mean(diff * ((diff >= 0.0) - tau)))


def degenerate_columns(X: np.ndarray, fit_intercept: bool) -> list[int]:
    """Columns that duplicate the intercept or an earlier column."""
    dropped: list[int] = []
    kept: list[int] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        if fit_intercept and np.all(col == col[0]):
            dropped.append(j)
            continue
        if any(np.array_equal(col, X[:, k]) for k in kept):
            dropped.append(j)
            continue
        kept.append(j)
    return dropped


def fit_qr(X, y, tau: float, fit_intercept: bool = True) -> QuantileRegModel:
    """Minimise the mean pinball loss of ``X beta + beta0`` against ``y``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has shape {X.shape} but y has {y.shape[0]} rows.")
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("Quantile regression inputs must be finite.")
    n, p = X.shape
    needed = p + 1 if fit_intercept else p
    if n < max(needed, 1):
        raise SizeError(f"Quantile regression needs at least {needed} rows, got {n}.")

    dropped = degenerate_columns(X, fit_intercept)
    if dropped:
        logging.warning("[quantreg tau=%g] dropping degenerate columns %s", tau, dropped)
    keep = [j for j in range(p) if j not in dropped]
    design = X[:, keep]
    if fit_intercept:
        design = np.hstack([np.ones((n, 1)), design])
    q = design.shape[1]

    c = np.concatenate([np.zeros(q), tau * np.ones(n), (1.0 - tau) * np.ones(n)])
    bounds = [(None, None)] * q + [(0, None)] * (2 * n)
    identity = sparse.identity(n, format="csr")
    A_eq = sparse.hstack([sparse.csr_matrix(design), identity, -identity], format="csr")
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs-ds")
    if not res.success:
        raise FitError(f"LP failure in quantile regression at tau={tau}: {res.message}")

    beta = res.x[:q]
    intercept = float(beta[0]) if fit_intercept else 0.0
    coefs = np.zeros(p)
    coefs[keep] = beta[1:] if fit_intercept else beta
    return QuantileRegModel(tau, intercept, tuple(coefs.tolist()), fit_intercept, tuple(dropped))


def qr_predict(m: QuantileRegModel, x) -> float:
    row = np.asarray(x, dtype=float)
    if row.ndim != 1:
        raise ShapeError("qr_predict takes a single row.")
    return float(m.predict(row[None, :])[0])


__all__ = ["QuantileRegModel", "degenerate_columns", "fit_qr", "pinball_mean", "qr_predict"]
