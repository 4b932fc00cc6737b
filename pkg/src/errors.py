"""Exception types raised by the toolkit."""
from typing import Optional, Tuple


class FloquetError(Exception):
    """Base class for all toolkit errors."""


class LatticeError(FloquetError, ValueError):
    """Invalid periods, non-canonical index or lattice-kind mismatch."""


class PotentialError(FloquetError, ValueError):
    """Potential values or documents inconsistent with their lattice."""


class SeparabilityError(FloquetError):
    """A potential failed the separability test where separability was required."""

    def __init__(self, message: str, witness: Optional[Tuple[int, ...]] = None, magnitude: float = 0.0):
        super().__init__(message)
        self.witness = witness
        self.magnitude = magnitude


class PolynomialError(FloquetError):
    """Degree-window violation, interpolation residual or extraction failure."""


class IsospectralityError(FloquetError):
    """A generated pair failed the isospectrality decision it was built to pass."""


class ParameterError(FloquetError, ValueError):
    """Invalid numerical argument such as a zero torus coordinate."""
