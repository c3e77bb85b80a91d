"""
Custom exceptions for the bounds library. These exceptions encapsulate
the errors that can occur while building models, certifying convergence
rates and integrating the forward Kolmogorov system.
"""

from typing import Optional, Sequence


class BoundsException(Exception):
    """
    Base exception for all errors raised by the library.

    This is the parent class for all custom exceptions in the package.
    It provides a consistent interface for error handling across model,
    certificate and solver operations.

    Parameters
    ----------
    message : str
        Human-readable error message describing what went wrong.

    Examples
    --------
    >>> exc = BoundsException("Something went wrong")
    >>> str(exc)
    'Something went wrong'
    >>> exc.message
    'Something went wrong'
    """

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InvalidParameterError(BoundsException):
    """
    Exception raised when arguments are invalid or out of range.

    Parameters
    ----------
    message : str, optional
        Human-readable error message, default is "Invalid or missing parameters."

    Examples
    --------
    >>> exc = InvalidParameterError()
    >>> str(exc)
    'Invalid or missing parameters.'

    >>> exc = InvalidParameterError("eps must lie in (0, 1)")
    >>> str(exc)
    'eps must lie in (0, 1)'
    """

    def __init__(self, message: str = "Invalid or missing parameters.") -> None:
        super().__init__(message)


class ModelValidationError(BoundsException):
    """
    Exception raised when a chain model violates its invariants.

    Parameters
    ----------
    violations : sequence of str
        Violated invariants as reported by ``validate``.

    Examples
    --------
    >>> exc = ModelValidationError(["negative intensity: death[1]"])
    >>> str(exc)
    'Invalid model: negative intensity: death[1]'
    >>> exc.violations
    ['negative intensity: death[1]']
    """

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        super().__init__("Invalid model: " + "; ".join(self.violations))


class ModelFileError(BoundsException):
    """
    Exception raised when a model or certificate file cannot be parsed.

    Parameters
    ----------
    message : str
        Human-readable error message.
    path : str or None, optional
        File the error refers to, default is None.
    line : int or None, optional
        Line number inside the file, default is None.

    Examples
    --------
    >>> str(ModelFileError("missing key 'class'", path="m.json", line=1))
    "m.json:1: missing key 'class'"
    >>> str(ModelFileError("empty document"))
    'empty document'
    """

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        if self.path is None:
            return self.message
        where = self.path if self.line is None else f"{self.path}:{self.line}"
        return f"{where}: {self.message}"


class HypothesisError(BoundsException):
    """
    Exception raised when a method's hypothesis fails for the given model.

    The message is used verbatim as the "not applicable" reason in the
    command-line summary.

    Parameters
    ----------
    message : str, optional
        Human-readable reason, default is "Hypothesis of the method does not hold."

    Examples
    --------
    >>> str(HypothesisError("B*(t) is not essentially non-negative"))
    'B*(t) is not essentially non-negative'
    """

    def __init__(self, message: str = "Hypothesis of the method does not hold.") -> None:
        super().__init__(message)


class NumericalError(BoundsException):
    """
    Exception raised when a numerical procedure fails.

    Covers non-converging power iterations, step-size underflow in the
    Kolmogorov integrator and certificates without a finite t*.

    Parameters
    ----------
    message : str, optional
        Human-readable error message, default is "Numerical procedure failed."

    Examples
    --------
    >>> str(NumericalError())
    'Numerical procedure failed.'
    """

    def __init__(self, message: str = "Numerical procedure failed.") -> None:
        super().__init__(message)
