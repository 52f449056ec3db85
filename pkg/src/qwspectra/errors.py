"""Typed failure modes shared across the package."""
from __future__ import annotations

__all__ = [
    "QwalkError",
    "AssumptionViolation",
    "UnitModulusLambda",
    "DegenerateSpectralParameter",
    "DependentDirections",
    "SlowConvergence",
]


class QwalkError(Exception):
    """Base class for all structured errors raised by qwspectra."""


class AssumptionViolation(QwalkError):
    """A coin or coin family violates a standing model assumption.

    Raised e.g. for a coin with a vanishing (1,1) or (2,2) entry, for a
    non-unitary coin where unitarity is required, or for a two-phase
    configuration outside the admissible parameter window.
    """


class UnitModulusLambda(QwalkError):
    """The spectral parameter sits (numerically) on the unit circle.

    Decaying/expanding tail solutions are only defined off the circle;
    boundary data must be reached through radial limits instead.
    """


class DegenerateSpectralParameter(QwalkError):
    """The tail transfer matrix has (numerically) coalescing eigenvalues."""


class DependentDirections(QwalkError):
    """The two boundary directions are numerically parallel.

    This is the signature of an eigenvalue: no Green function exists at
    this spectral parameter.
    """


class SlowConvergence(QwalkError):
    """An iterative expansion failed to meet tolerance within its cap."""
