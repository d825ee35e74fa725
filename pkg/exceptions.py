"""
Custom exception classes for the Steiner Forest approximation pipeline.

This module defines a hierarchy of exceptions used throughout the pipeline.
All exceptions inherit from SteinerForestError, which is the base exception for
every instance, engine, improvement and oracle failure.
"""
from typing import List, Sequence


class SteinerForestError(Exception):
    """Base exception for Steiner Forest pipeline errors."""
    pass


class InstanceParseError(SteinerForestError):
    """Raised when an STP-F document cannot be parsed."""

    def __init__(self, line: int, column: int, reason: str) -> None:
        self.line: int = line
        self.column: int = column
        self.reason: str = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class InstanceValidationError(SteinerForestError):
    """Raised when an instance violates its invariants."""

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid instance")


class InfeasibleInstanceError(InstanceValidationError):
    """Raised when some demand pair spans two graph components."""
    pass


class GenerationError(SteinerForestError):
    """Raised when random instance parameters cannot be satisfied."""
    pass


class TerminalLimitError(SteinerForestError):
    """Raised when an exact Steiner tree is requested on too many terminals."""
    pass


class CandidateLimitError(SteinerForestError):
    """Raised when restricted-set enumeration would exceed the candidate cap."""
    pass


class NotActivelyConnectedError(SteinerForestError):
    """Raised when a contraction set spans several actively connected classes."""
    pass


class InfeasibleForestError(SteinerForestError):
    """Raised when an operation requires a feasible forest and gets another."""
    pass


class LaminarityError(SteinerForestError):
    """Raised when two autarkic tuples are neither nested nor disjoint."""
    pass


class MoatEngineError(SteinerForestError):
    """Raised when the moat-growing event loop reaches an inconsistent state."""
    pass


class OracleLimitError(SteinerForestError):
    """Raised when the exact oracle would exceed its configured limits."""
    pass


class ConfigurationError(SteinerForestError):
    """Raised when pipeline parameters or config files are invalid."""
    pass
