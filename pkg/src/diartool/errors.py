from __future__ import annotations


class DiartoolError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(DiartoolError, ValueError):
    """Malformed on-disk input (bad line, bad number, wrong shape)."""


class InputError(DiartoolError, ValueError):
    """Structurally valid input that violates an operation's preconditions."""


class BudgetExceededError(DiartoolError):
    """A requested computation would exceed its configured resource budget."""


class InvariantError(DiartoolError):
    """An internal consistency check failed."""
