"""Exception types shared across lexitree."""

from __future__ import annotations


class LexitreeError(Exception):
    """Base class for all library errors."""


class StructureError(LexitreeError, ValueError):
    """A structure, signature or tuple violates its invariants."""


class DSLSyntaxError(LexitreeError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class BudgetExceeded(LexitreeError):
    """An explicit resource budget was exceeded; nothing is silently truncated."""


class TreeError(LexitreeError, ValueError):
    pass


class ExtensionError(LexitreeError):
    """A one-point extension could not be found; `constraint` names the blocker."""

    def __init__(self, message: str, constraint: str | None = None):
        super().__init__(message)
        self.constraint = constraint


class PreconditionError(LexitreeError, ValueError):
    pass
