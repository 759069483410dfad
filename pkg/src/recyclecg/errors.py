"""Exception types raised by the solver stack."""


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class NotSPDError(ValueError):
    """A matrix that must be SPD is not (non-positive diagonal, pivot, or curvature)."""


class ICBreakdown(ArithmeticError):
    """Incomplete Cholesky failed even after the diagonal-shift retries."""


class SolverBreakdown(ArithmeticError):
    """A Krylov recurrence hit a non-positive curvature (p, Ap) <= 0."""
