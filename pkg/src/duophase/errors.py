"""Exception types shared across the package.

The command-line layer maps these onto exit codes: ``UsageError`` and its
subclasses mean "the request itself is malformed or violates a documented
precondition" (exit code 2), while a *failed check* is a regular result,
not an exception (exit code 1).
"""

from __future__ import annotations


class DuophaseError(Exception):
    """Base class for errors raised by this package."""


class UsageError(DuophaseError):
    """Bad request: invalid parameters or violated preconditions."""


class ConfigError(UsageError):
    """Unreadable or invalid experiment configuration.

    ``lineno`` is set when the offending line in the config text is known.
    """

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
