"""Exception hierarchy.

Mathematical refusals (stability, resonance, pole) derive from
``MathematicalRefusal`` so front ends can map them to a distinct exit code.
"""

from __future__ import annotations


class BilliardTwistError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class InvalidProfileError(BilliardTwistError, ValueError):
    code = "invalid-profile"


class InvalidParameterError(BilliardTwistError, ValueError):
    code = "invalid-parameter"


class UnsupportedError(BilliardTwistError, ValueError):
    code = "unsupported"


class DomainError(BilliardTwistError, ValueError):
    code = "domain"


class OrbitLeftDomainError(DomainError):
    code = "orbit-left-domain"


class SeriesDivisionError(BilliardTwistError, ZeroDivisionError):
    code = "series-division"


class ImplicitSingularityError(BilliardTwistError, ArithmeticError):
    code = "implicit-singularity"


class DegenerateOrbitError(BilliardTwistError, ArithmeticError):
    code = "degenerate-orbit"


class CompositionError(BilliardTwistError, ValueError):
    code = "composition"


class NotApplicableError(BilliardTwistError, ValueError):
    code = "not-applicable"


class MathematicalRefusal(BilliardTwistError):
    """The input is valid but the requested quantity is undefined there."""


class StabilityError(MathematicalRefusal):
    code = "stability"

    def __init__(self, classification: str, message: str | None = None):
        self.classification = classification
        super().__init__(message or f"periodic orbit is {classification}, not elliptic")


class ResonanceError(MathematicalRefusal):
    code = "resonance"

    def __init__(self, order: int, message: str | None = None):
        self.order = order
        super().__init__(message or f"eigenvalue resonance lambda^{order} = 1")


class PoleError(MathematicalRefusal):
    code = "pole"

    def __init__(self, factor: str, message: str | None = None):
        self.factor = factor
        super().__init__(message or f"formula has a pole: {factor} vanishes")
