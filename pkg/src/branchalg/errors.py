"""Exception hierarchy shared by every module."""

from __future__ import annotations

__all__ = [
    "BranchAlgError",
    "InvalidArgument",
    "NotFound",
    "PreconditionViolation",
    "ResourceLimitError",
]


class BranchAlgError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgument(BranchAlgError, ValueError):
    pass


class NotFound(BranchAlgError, LookupError):
    pass


class PreconditionViolation(BranchAlgError, ValueError):
    pass


class ResourceLimitError(BranchAlgError, RuntimeError):
    """A configured cap (degree, level, memory) would be exceeded.

    ``partial`` carries whatever was computed before giving up, so callers can
    report it flagged as incomplete.
    """

    def __init__(self, message: str, partial: object = None) -> None:
        super().__init__(message)
        self.partial = partial
