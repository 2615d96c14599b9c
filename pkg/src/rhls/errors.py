"""Exception types shared across the package."""


class RangeError(ValueError):
    """A scalar parameter lies outside its admissible open interval."""


class BalanceError(RangeError):
    """Supplied exponents violate the scaling balance beyond tolerance."""


class DomainError(ValueError):
    """A point lies outside the domain of a geometric map."""


class SingularityError(ZeroDivisionError):
    """Evaluation exactly at the singular point of an inversion."""


class PoleError(ValueError):
    """Gamma evaluated at a nonpositive integer."""


class NonFiniteError(ArithmeticError):
    """A quadrature sample came out NaN or infinite."""


class TruncationError(ArithmeticError):
    """Tail bound of a truncated integral exceeds the accepted fraction."""


class FitError(RuntimeError):
    """The profile fit failed to improve on its initial guess."""


class NoConvergence(RuntimeError):
    """Iteration hit max_iter before meeting the tolerance.

    Carries the partial report so callers can still inspect it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
