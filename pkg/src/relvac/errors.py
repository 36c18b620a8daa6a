"""Exception hierarchy.

Every failure raised by the library derives from :class:`RelvacError`, so
callers (notably the command line front end) can map categories onto exit
codes without inspecting messages.
"""

from __future__ import annotations


class RelvacError(Exception):
    """Base class for all library errors."""


class DomainError(RelvacError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConstraintError(DomainError):
    """A four-velocity violates the unit-timelike normalization."""


class InadmissibleStateError(RelvacError):
    """A state leaves the admissible regime (superluminal sound speed,
    degenerate boundary slope, non-finite values...)."""


class DegenerateDomainError(InadmissibleStateError):
    """The fluid region is empty, fills the box, or is not a single blob."""


class DivergentWeightError(DomainError):
    """A weight exponent makes the degenerate integral divergent."""


class CoverageError(RelvacError):
    """Scattered data leave a gap wider than the resampling tolerance."""


class CFLViolationError(RelvacError):
    """A time step exceeds the stability bound."""


class FoldOverError(RelvacError):
    """The transport map is not monotone (the step is too large)."""


class StepRejectedError(RelvacError):
    """The energy guard rejected a step; the failing report is attached."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class UnsupportedLevelError(DomainError):
    """The requested energy or norm level exceeds the supported range."""


class HypothesisError(DomainError):
    """Inputs violate a hypothesis of the inequality being tested."""


class ConfigError(RelvacError):
    """A scenario file or command line configuration is invalid."""
