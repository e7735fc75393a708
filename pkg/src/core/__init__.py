"""Configuration loading shared by the CLI and the engine."""

from .config_loader import load_config, parse_config

__all__ = ["load_config", "parse_config"]
