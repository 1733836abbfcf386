"""Exception hierarchy shared by all powerfwd modules."""


class PowerFwdError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PowerFwdError, ValueError):
    """A CSV row could not be parsed.

    Parameters
    ----------
    line : int
        1-based line number in the source stream (the header is line 1).
    message : str
        What went wrong.
    """

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(PowerFwdError, ValueError):
    """A value violates a documented invariant (e.g. non-positive price)."""


class AmbiguityError(PowerFwdError, ValueError):
    """Two quotes claim the same (tenor, roll slot) on one observation date."""


class AssemblyError(PowerFwdError, ValueError):
    """A contract window does not lie on the knot grid."""


class DomainError(PowerFwdError, ValueError):
    """An argument lies outside the domain of the function."""


class StructuralError(PowerFwdError, ValueError):
    """Child delivery windows do not partition the parent window."""


class InconsistentQuotesError(PowerFwdError, ValueError):
    """Prices of linearly dependent delivery windows contradict each other."""


class NumericalError(PowerFwdError, ArithmeticError):
    """A linear system or ODE could not be solved reliably.

    Parameters
    ----------
    message : str
        Description.
    condition : float, optional
        Condition-number estimate when the failure comes from a linear solve.
    """

    def __init__(self, message, condition=None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)


class InsufficientDataError(PowerFwdError, ValueError):
    """Too few observations for the requested computation."""


class ExplosionError(PowerFwdError, RuntimeError):
    """A simulated point process exceeded the event safety cap."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)
