"""Exception hierarchy shared by every module."""


class DomainError(ValueError):
    """Input violates a precondition of the operation."""


class ParseError(DomainError):
    """Malformed text input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularityError(ArithmeticError):
    """Gram matrix is singular or too ill-conditioned to solve."""

    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")
