"""Relativistic free-boundary Euler flow with a physical vacuum boundary."""

from .goodvars import Params

__version__ = "0.1.0"

__all__ = ["Params", "__version__"]
