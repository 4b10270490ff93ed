"""Exception hierarchy.  Each class carries the machine-readable ``kind`` the CLI reports."""
from __future__ import annotations


class AKNSError(Exception):
    kind = "internal"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class InvalidParamsError(AKNSError, ValueError):
    kind = "invalid-params"


class SchemaError(AKNSError, ValueError):
    kind = "schema-violation"


class SolverError(AKNSError, RuntimeError):
    """The collocation self-checks failed; ``details`` holds the achieved residual."""

    kind = "solver-failure"


class DegenerateNormalizationError(AKNSError, ArithmeticError):
    kind = "degenerate-normalization"


class RootCountError(AKNSError, RuntimeError):
    kind = "root-count-mismatch"


class DivergenceError(AKNSError, RuntimeError):
    kind = "divergence"
