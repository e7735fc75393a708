"""Inverse-distance-weighted satellite features.

For the four grid points closest to a station with raw values PR_i at
distances d_i, feature i is ``(PR_i / d_i**2) / sum_j(1 / d_j**2)``. The four
features of one product sum to the inverse-distance-weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ShapeError

N_NEIGHBORS = 4
IDW_POWER = 2.0


@dataclass(frozen=True)
class NeighborObservation:
    values: tuple[float, ...]
    distances: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        distances = tuple(float(d) for d in self.distances)
        if len(values) != N_NEIGHBORS or len(distances) != N_NEIGHBORS:
            raise ShapeError(f"Expected {N_NEIGHBORS} values and distances.")
        if any(not np.isfinite(v) or v < 0.0 for v in values):
            raise DomainError("Grid precipitation values must be finite and >= 0.")
        if any(not np.isfinite(d) or d <= 0.0 for d in distances):
            raise DomainError(
                "Distances must be > 0; perturb exact co-location by 1e-6 km before weighting."
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "distances", distances)


def idw_features_array(values, distances) -> np.ndarray:
    """Row-wise weighted features for (n, 4) values and distances."""
    values = np.asarray(values, dtype=float)
    distances = np.asarray(distances, dtype=float)
    if values.shape != distances.shape or values.shape[-1] != N_NEIGHBORS:
        raise ShapeError(f"values and distances must both be (n, {N_NEIGHBORS}).")
    if np.any(~np.isfinite(distances)) or np.any(distances <= 0.0):
        raise DomainError("Distances must be > 0; perturb exact co-location by 1e-6 km before weighting.")
    if np.any(~np.isfinite(values)) or np.any(values < 0.0):
        raise DomainError("Grid precipitation values must be finite and >= 0.")
    inv = distances ** (-IDW_POWER)
    return values * inv / inv.sum(axis=-1, keepdims=True)


def idw_features(obs: NeighborObservation) -> list[float]:
    return idw_features_array(np.array([obs.values]), np.array([obs.distances]))[0].tolist()


__all__ = ["IDW_POWER", "N_NEIGHBORS", "NeighborObservation", "idw_features", "idw_features_array"]
