"""Exception types shared across the library."""

from __future__ import annotations


class DimensionMismatchError(ValueError):
    """Operands live in cubes of different dimension."""


class EmptyIndexError(LookupError):
    """A nearest query was issued before any point was inserted."""


class ContractViolationError(RuntimeError):
    """A caller broke an operation precondition (e.g. out-of-order insert)."""


class RegimeError(ValueError):
    """A closed-form quantity was requested outside its parameter regime."""


class UnsupportedDimensionError(ValueError):
    """The operation is only defined in a specific dimension."""


class InsufficientDataError(ValueError):
    """Not enough samples to evaluate the requested estimate."""


class ConfigError(ValueError):
    """An experiment config failed validation."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field

    def to_json_dict(self) -> dict:
        out = {"error": str(self)}
        if self.field is not None:
            out["field"] = self.field
        return out


class OracleMismatchError(RuntimeError):
    """The grid index and the brute-force oracle disagreed on a query."""
