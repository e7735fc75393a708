"""Exception types shared across the toolkit.

CLI exit codes are chosen from the exception class (see ``src.cli``), so new
failure modes should subclass one of these rather than raising bare builtins.
"""

from __future__ import annotations


class ZadrError(Exception):
    """Base class for every error raised on purpose by this package."""


class DomainError(ZadrError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(ZadrError, ValueError):
    """Distribution parameters violate mu > 0, sigma > 0, 0 < nu < 1."""


class ShapeError(ZadrError, ValueError):
    """Lengths or column counts do not line up."""


class SizeError(ZadrError, ValueError):
    """Too few samples for the requested operation."""


class PreconditionError(ZadrError, ValueError):
    """Caller-supplied inputs break an operation contract."""


class NumericError(ZadrError, ArithmeticError):
    """An iterative numeric routine failed to converge."""


class FitError(ZadrError, RuntimeError):
    """Model fitting failed."""

    def __init__(self, message: str, learner_id: str | None = None) -> None:
        self.learner_id = learner_id
        prefix = f"[{learner_id}] " if learner_id else ""
        super().__init__(f"{prefix}{message}")


class ConfigError(ZadrError, ValueError):
    """Experiment configuration failed validation."""


class DataError(ZadrError, ValueError):
    """Input data does not follow the dataset contract."""


__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "FitError",
    "NumericError",
    "ParameterError",
    "PreconditionError",
    "ShapeError",
    "SizeError",
    "ZadrError",
]
