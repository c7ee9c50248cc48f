"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain an operation accepts."""


class FormatError(ValueError):
    """A binary file is malformed; ``offset`` is the byte position at fault."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericError(ArithmeticError):
    """A numerical computation produced non-finite or unusable values."""


class SupportWarning(UserWarning):
    """Data suggest the field violates a support hypothesis of the inversion."""


class ConditioningWarning(UserWarning):
    """A linear solve left a large residual."""
