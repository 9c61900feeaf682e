"""Exception types raised by corrlab validators and constructors.

Every constructor in this package validates its output and raises one of
these on failure; nothing is ever returned un-checked.  Validation errors
carry the offending residual where one exists, so callers (and the CLI
``validate`` command) can report how badly an invariant failed.
"""
from __future__ import annotations

__all__ = [
    "CorrLabError",
    "ValidationError",
    "InvalidAlgebra",
    "ShapeMismatch",
    "NotMultiplicative",
    "NotStarPreserving",
    "NotProjection",
    "LengthMismatch",
    "BaseMismatch",
    "EndpointMismatch",
    "NotUnitary",
    "NotRightLinear",
    "NotIntertwining",
    "UnitConditionViolated",
    "PentagonViolated",
    "NotMonotone",
    "Unfillable",
    "IncompatibleFaces",
    "NotAnEquivalence",
    "DimensionTooLarge",
    "IndexOutOfRange",
    "ShapeViolation",
    "NotNested",
    "FunctorialityViolated",
    "OracleFillFailed",
    "CompatibilityViolated",
    "NotStableOnDiagram",
    "BoundaryMismatch",
    "ParseError",
    "SchemaError",
]


class CorrLabError(Exception):
    """Base class for all corrlab errors."""


class ValidationError(CorrLabError):
    """An invariant check failed.  ``residual`` is the worst offending norm."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class InvalidAlgebra(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NotMultiplicative(ValidationError):
    pass


class NotStarPreserving(ValidationError):
    pass


class NotProjection(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class BaseMismatch(ValidationError):
    pass


class EndpointMismatch(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotRightLinear(ValidationError):
    pass


class NotIntertwining(ValidationError):
    pass


class UnitConditionViolated(ValidationError):
    def __init__(self, i: int, k: int, residual: float | None = None):
        super().__init__(f"unit condition fails at (i, k) = ({i}, {k})", residual)
        self.i, self.k = i, k


class PentagonViolated(ValidationError):
    def __init__(self, i: int, j: int, k: int, l: int, residual: float):
        super().__init__(f"pentagon fails at (i, j, k, l) = ({i}, {j}, {k}, {l})", residual)
        self.indices = (i, j, k, l)


class NotMonotone(ValidationError):
    pass


class Unfillable(ValidationError):
    pass


class IncompatibleFaces(ValidationError):
    pass


class NotAnEquivalence(ValidationError):
    pass


class DimensionTooLarge(CorrLabError):
    pass


class IndexOutOfRange(CorrLabError):
    pass


class ShapeViolation(ValidationError):
    pass


class NotNested(ValidationError):
    pass


class FunctorialityViolated(ValidationError):
    def __init__(self, s, t, u, residual: float):
        super().__init__(f"f_TU . f_ST != f_SU at S={set(s)}, T={set(t)}, U={set(u)}", residual)
        self.chain = (s, t, u)


class OracleFillFailed(ValidationError):
    pass


class CompatibilityViolated(ValidationError):
    pass


class NotStableOnDiagram(ValidationError):
    pass


class BoundaryMismatch(ValidationError):
    pass


class ParseError(CorrLabError):
    pass


class SchemaError(CorrLabError):
    pass
