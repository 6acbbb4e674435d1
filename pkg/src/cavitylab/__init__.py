"""Exact-diagonalization laboratory for dipole-coupled cavity QED models."""

from .core import *  # noqa: F401,F403
from .errors import (
    CavityLabError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    InvalidArgumentError,
    InvalidModelError,
    PropagationError,
)

__version__ = "0.1.0"
