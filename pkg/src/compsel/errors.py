"""Exception hierarchy.

Everything a user can fix by editing an input file derives from
:class:`InputError`; the CLI maps those to exit code 1.
"""

from __future__ import annotations

from typing import Iterable, Optional


class InputError(ValueError):
    """Bad input data or arguments."""


class ParseError(InputError):
    """Input is not well-formed (bad JSON/CSV, wrong shapes, unknown keys)."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(InputError):
    """Input parses but violates a data invariant.

    ``ident`` names the offending component, attribute or metric when there is one.
    """

    def __init__(self, message: str, ident: Optional[str] = None):
        super().__init__(message)
        self.ident = ident


class WeightsError(ValidationError):
    """Quality weights out of range or not summing to one."""

    def __init__(self, message: str, ident: Optional[str] = None, actual_sum: Optional[float] = None):
        super().__init__(message, ident)
        self.actual_sum = actual_sum


class UncoverableError(InputError):
    """Some required requirement ids are provided by no surviving component."""

    def __init__(self, requirements: Iterable[str]):
        self.requirements = tuple(sorted(requirements))
        super().__init__("requirements not provided by any surviving component: " + ", ".join(self.requirements))


class GuardError(InputError):
    """Instance too large for exhaustive enumeration."""
