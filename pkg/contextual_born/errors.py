from typing import Any, Dict, Optional


class EngineError(Exception):
    """Base error. `code` is stable and meant for programmatic handling."""

    code = "ENGINE_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details


class ZeroVector(EngineError):
    code = "ZERO_VECTOR"


class DimensionMismatch(EngineError):
    code = "DIMENSION_MISMATCH"


class InvalidDimension(EngineError):
    code = "INVALID_DIMENSION"


class NotHermitian(EngineError):
    code = "NOT_HERMITIAN"


class NotOrthonormal(EngineError):
    code = "NOT_ORTHONORMAL"


class DegenerateDenominator(EngineError):
    """The post-selected state lies outside the sample space (or a, b cancel)."""

    code = "DEGENERATE_DENOMINATOR"


class NotInSubalgebra(EngineError):
    code = "NOT_IN_SUBALGEBRA"


class InvalidMeasureSpec(EngineError):
    code = "INVALID_MEASURE_SPEC"


class PreconditionFailed(EngineError):
    code = "PRECONDITION_FAILED"


class NotConverged(EngineError):
    code = "NOT_CONVERGED"


class ContractViolation(EngineError):
    """A computed quantity broke one of the numerical guarantees."""

    code = "CONTRACT_VIOLATION"
