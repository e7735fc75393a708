"""P-spline bases: equally spaced B-splines with a difference penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from ..errors import DomainError, ShapeError


@dataclass(frozen=True)
class SplineBasisSpec:
    """B-spline basis of one predictor.

    ``knots`` is the full knot vector: ``n_interior`` equally spaced interior
    knots between the boundary knots (the training range), padded with
    ``degree`` extra knots of the same spacing on each side.
    """

    knots: tuple[float, ...]
    degree: int = 3
    penalty_order: int = 2
    lam: float = 1000.0

    def __post_init__(self) -> None:
        knots = tuple(float(t) for t in self.knots)
        if self.degree < 0:
            raise DomainError(f"degree must be >= 0, got {self.degree}")
        if len(knots) < 2 * self.degree + 2:
            raise ShapeError(f"A degree-{self.degree} basis needs at least {2 * self.degree + 2} knots.")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("Knots must be strictly increasing.")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise DomainError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.penalty_order < 0:
            raise DomainError(f"penalty order must be >= 0, got {self.penalty_order}")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def from_range(
        cls,
        lower: float,
        upper: float,
        n_interior: int = 20,
        degree: int = 3,
        penalty_order: int = 2,
        lam: float = 1000.0,
    ) -> "SplineBasisSpec":
        lower, upper = float(lower), float(upper)
        if not upper > lower:
            # constant predictor; any positive width gives the same (flat) fit
            upper = lower + 1.0
        step = (upper - lower) / (n_interior + 1)
        knots = lower + step * np.arange(-degree, n_interior + degree + 2)
        knots[degree] = lower
        knots[-degree - 1] = upper
        return cls(tuple(knots.tolist()), degree=degree, penalty_order=penalty_order, lam=lam)

    @property
    def size(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def lower(self) -> float:
        return self.knots[self.degree]

    @property
    def upper(self) -> float:
        return self.knots[-self.degree - 1]

    def penalty(self) -> np.ndarray:
        return self.lam * difference_penalty(self.size, self.penalty_order)

    def to_dict(self) -> dict:
        return {
            "knots": list(self.knots),
            "degree": self.degree,
            "penalty_order": self.penalty_order,
            "lam": self.lam,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SplineBasisSpec":
        return cls(
            knots=tuple(payload["knots"]),
            degree=int(payload["degree"]),
            penalty_order=int(payload["penalty_order"]),
            lam=float(payload["lam"]),
        )


def bspline_design(x, spec: SplineBasisSpec) -> np.ndarray:
    """Basis rows for ``x`` (scalar or 1-D); inputs clamped to the boundary knots."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    clamped = np.clip(arr, spec.lower, spec.upper)
    t = np.asarray(spec.knots)
    rows = BSpline.design_matrix(clamped, t, spec.degree, extrapolate=False).toarray()
    return rows[0] if np.ndim(x) == 0 else rows


def difference_penalty(k: int, order: int = 2) -> np.ndarray:
    """``D.T @ D`` for the order-``order`` difference operator on k coefficients."""
    if k <= order:
        raise ShapeError(f"basis size {k} must exceed the penalty order {order}")
    D = np.diff(np.eye(k), order, axis=0)
    return D.T @ D


__all__ = ["SplineBasisSpec", "bspline_design", "difference_penalty"]
