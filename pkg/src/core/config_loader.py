"""Load experiment configuration from JSON/YAML files plus CLI overrides."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Mapping

import yaml
from pydantic import ValidationError

from ..api.v1.endpoints import ExperimentConfig
from ..errors import ConfigError

DEFAULT_CONFIG_PATH = Path("src/config.yaml")


def _load_yaml(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        payload = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"Could not parse {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(payload).__name__}")
    return payload


def _merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
        parts.append(f"{path}: {err.get('msg')}")
    return "; ".join(parts)


def load_config(path: Path | str) -> Dict[str, Any]:
    """Raw mapping from a JSON or YAML file (JSON is read as YAML)."""
    return _load_yaml(Path(path))


def parse_config(
    path: Path | str | None = None,
    overrides: Mapping[str, Any] | None = None,
    quick: bool = False,
) -> ExperimentConfig:
    """Validated config with defaults filled; unknown keys are rejected."""
    payload: Dict[str, Any] = load_config(path) if path is not None else {}
    if overrides:
        payload = _merge(payload, {k: v for k, v in overrides.items() if v is not None})
    try:
        config = ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration: {_format_errors(exc)}") from exc
    if quick or config.quick:
        config = config.apply_quick()
    return config


__all__ = ["DEFAULT_CONFIG_PATH", "load_config", "parse_config"]
