"""Configuration-driven runs."""

from .config import RunConfig, parse_config, validate
from .run import run

__all__ = ["RunConfig", "parse_config", "run", "validate"]
