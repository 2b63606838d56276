"""Proper scoring rules for categorical and density forecasts.

All scores are losses in natural-log units: lower is better.
"""

__version__ = "0.1.0"

from .core import (
    DomainError,
    Grid,
    GridCDF,
    GridDensity,
    GridMismatchError,
    NumericalError,
    OddPerturbation,
    ProbVector,
    ScoreReport,
    ValidationError,
)
from ._kernels import BACKEND

__all__ = [
    "BACKEND",
    "DomainError",
    "Grid",
    "GridCDF",
    "GridDensity",
    "GridMismatchError",
    "NumericalError",
    "OddPerturbation",
    "ProbVector",
    "ScoreReport",
    "ValidationError",
    "__version__",
]
