"""
Exception types shared across sk-descent.
"""


class SkDescentError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(SkDescentError, ValueError):
    """An operation received an argument outside its domain."""


class SizeLimitError(InvalidArgumentError):
    """A system size exceeds what an exhaustive method will accept."""


class UsageError(SkDescentError):
    """Invalid command-line or campaign configuration."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
