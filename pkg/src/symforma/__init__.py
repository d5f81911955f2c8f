"""Symmetry-forced rigidity analysis and formation control for multi-agent frameworks."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ArgumentError,
    AssumptionError,
    CapacityError,
    IntegrationError,
    RepresentationError,
    ScenarioError,
    SymformaError,
    SymmetryError,
    UnsupportedActionError,
)

__all__ = [
    "__version__",
    "ArgumentError",
    "AssumptionError",
    "CapacityError",
    "IntegrationError",
    "RepresentationError",
    "ScenarioError",
    "SymformaError",
    "SymmetryError",
    "UnsupportedActionError",
]
