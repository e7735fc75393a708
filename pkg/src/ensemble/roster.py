"""The 17 compared algorithms: six individual learners, six mean/median
combiners and five stacked generalizations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..distributions import Family
from ..errors import ConfigError


class AlgorithmKind(str, Enum):
    INDIVIDUAL = "individual"
    MEAN = "mean"
    MEDIAN = "median"
    STACKING = "stacking"


class ModelType(str, Enum):
    GAMLSS_LINEAR = "gamlss-linear"
    GAMLSS_SPLINES = "gamlss-splines"
    FOREST = "forest"


@dataclass(frozen=True)
class LearnerSpec:
    """An individual distributional regression algorithm."""

    id: str
    model: ModelType
    family: Family


@dataclass(frozen=True)
class AlgorithmSpec:
    id: str
    kind: AlgorithmKind
    bases: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind is AlgorithmKind.INDIVIDUAL and self.bases:
            raise ConfigError(f"Individual algorithm {self.id} cannot have base learners.")
        if self.kind is not AlgorithmKind.INDIVIDUAL and len(self.bases) < 2:
            raise ConfigError(f"Ensemble {self.id} needs at least two base learners.")


LEARNERS: dict[str, LearnerSpec] = {
    spec.id: spec
    for spec in (
        LearnerSpec("GAMLSS-ZAIG", ModelType.GAMLSS_LINEAR, Family.ZAIG),
        LearnerSpec("GAMLSS-ZAGA", ModelType.GAMLSS_LINEAR, Family.ZAGA),
        LearnerSpec("GAMLSS-ZAIG-Splines", ModelType.GAMLSS_SPLINES, Family.ZAIG),
        LearnerSpec("GAMLSS-ZAGA-Splines", ModelType.GAMLSS_SPLINES, Family.ZAGA),
        LearnerSpec("DRF-ZAIG", ModelType.FOREST, Family.ZAIG),
        LearnerSpec("DRF-ZAGA", ModelType.FOREST, Family.ZAGA),
    )
}

# learners refit only on sets 1 and 2 together; they never feed a combiner
BENCHMARK_LEARNERS = ("GAMLSS-ZAIG", "GAMLSS-ZAGA")
BASE_LEARNERS = ("GAMLSS-ZAIG-Splines", "GAMLSS-ZAGA-Splines", "DRF-ZAIG", "DRF-ZAGA")

_SPLINES = ("GAMLSS-ZAIG-Splines", "GAMLSS-ZAGA-Splines")
_FORESTS = ("DRF-ZAIG", "DRF-ZAGA")
_ZAIG_PAIR = ("GAMLSS-ZAIG-Splines", "DRF-ZAIG")
_ZAGA_PAIR = ("GAMLSS-ZAGA-Splines", "DRF-ZAGA")
_COMBINATIONS = (_SPLINES, _FORESTS, _ZAIG_PAIR, _ZAGA_PAIR, BASE_LEARNERS)


def ensemble_id(kind: AlgorithmKind, bases: tuple[str, ...]) -> str:
    return f"{kind.value.capitalize()}({','.join(bases)})"


def _build_roster() -> tuple[AlgorithmSpec, ...]:
    specs = [AlgorithmSpec(learner_id, AlgorithmKind.INDIVIDUAL) for learner_id in LEARNERS]
    specs += [AlgorithmSpec(ensemble_id(AlgorithmKind.MEAN, b), AlgorithmKind.MEAN, b) for b in _COMBINATIONS]
    specs.append(AlgorithmSpec(ensemble_id(AlgorithmKind.MEDIAN, BASE_LEARNERS), AlgorithmKind.MEDIAN, BASE_LEARNERS))
    specs += [
        AlgorithmSpec(ensemble_id(AlgorithmKind.STACKING, b), AlgorithmKind.STACKING, b) for b in _COMBINATIONS
    ]
    return tuple(specs)


ROSTER: tuple[AlgorithmSpec, ...] = _build_roster()
ROSTER_BY_ID: dict[str, AlgorithmSpec] = {spec.id: spec for spec in ROSTER}
ALGORITHM_IDS: tuple[str, ...] = tuple(spec.id for spec in ROSTER)


def get_algorithm(algorithm_id: str) -> AlgorithmSpec:
    try:
        return ROSTER_BY_ID[algorithm_id]
    except KeyError as exc:
        raise ConfigError(f"Unknown algorithm '{algorithm_id}'. Known ids: {', '.join(ALGORITHM_IDS)}") from exc


def get_learner(learner_id: str) -> LearnerSpec:
    try:
        return LEARNERS[learner_id]
    except KeyError as exc:
        raise ConfigError(f"Unknown individual learner '{learner_id}'.") from exc


def required_learners(algorithm_ids) -> list[str]:
    """Individual learners needed to produce the given algorithms, roster order."""
    needed: set[str] = set()
    for algorithm_id in algorithm_ids:
        spec = get_algorithm(algorithm_id)
        needed.update(spec.bases if spec.bases else (spec.id,))
    return [learner_id for learner_id in LEARNERS if learner_id in needed]


def file_slug(algorithm_id: str) -> str:
    """Filesystem-friendly form of an algorithm id."""
    return algorithm_id.replace("(", "_").replace(")", "").replace(",", "_")


__all__ = [
    "ALGORITHM_IDS",
    "AlgorithmKind",
    "AlgorithmSpec",
    "BASE_LEARNERS",
    "BENCHMARK_LEARNERS",
    "LEARNERS",
    "LearnerSpec",
    "ModelType",
    "ROSTER",
    "ensemble_id",
    "file_slug",
    "get_algorithm",
    "get_learner",
    "required_learners",
]
