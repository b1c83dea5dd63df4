"""Exception hierarchy shared by all modules."""


class PonceletError(Exception):
    """Base class for every error raised by the lab."""


class DomainError(PonceletError, ValueError):
    """Input outside the domain of an operation."""


class TangencyError(PonceletError):
    """A ray is tangent to the table (zero-length chord)."""


class DegeneracyError(PonceletError):
    """Geometric degeneracy: parallel lines, points at infinity, focal points."""


class FitError(PonceletError):
    """Least-squares conic fit is rank deficient."""


class NoOrbitError(PonceletError):
    """No periodic orbit with the requested period and rotation number."""


class ConvergenceError(PonceletError):
    """Root finding did not converge or the porism re-check failed."""


class ClosureError(PonceletError):
    """An orbit in a family sweep does not close."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
