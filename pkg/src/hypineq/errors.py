"""Exception types shared across the package."""

from __future__ import annotations


class HypineqError(Exception):
    """Base class for every error raised by this package."""


class AdmissibilityError(HypineqError):
    """Parameters or a test profile violate an inequality's admissible set."""

    def __init__(self, message: str, violations: tuple[str, ...] = ()):
        super().__init__(message)
        self.violations = tuple(violations)


class QuadratureError(HypineqError):
    """Base class for numeric integration failures."""


class DivergentTailError(QuadratureError):
    """The integrand grows (or decays too slowly) at infinity; the integral diverges."""


class DivergentIntegralError(QuadratureError):
    """Non-integrable endpoint singularity (local power <= -1)."""


class NonConvergenceError(QuadratureError):
    """Adaptive integration exhausted its subdivision budget.

    The best available estimate is attached as a QuadResult in ``best``.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class BoundaryWeightSingularityError(QuadratureError):
    """A profile's support reaches the domain radius R of a boundary-singular weight."""


class AssemblyError(HypineqError):
    """Discrete quadratic forms could not be assembled (e.g. indefinite mass matrix)."""


class EigenSolveError(HypineqError):
    """The generalized eigenvalue iteration stagnated; best estimate attached."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ExpressionError(HypineqError):
    """Parse or evaluation failure in a coefficient/constraint expression."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SpecDocumentError(HypineqError):
    """A custom inequality document does not conform to the schema."""


class ProfileSpecError(HypineqError):
    """A profile specification string or grid file is malformed."""
