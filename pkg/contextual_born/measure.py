"""Candidate probability measures over a context, and Ex/Var built on them.

    Born          P(w) = |<w|psi>|^2
    Quartic       P(w) = |<w|psi>|^4
    Parametrized  P(w) = sum_i mu_i <psi_i|w><w|psi> + P0,   psi_0 = psi

Parametrized weights are complex in general. They are kept as they are and
flagged through `MeasureValidity`, never clamped.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_TOLERANCES, Tolerances
from .contextual import WEAK, CvParams, contextual_values, sample_space
from .errors import InvalidMeasureSpec
from .hilbert import Context, Operator, StateVector, check_same_dim, inner, orthonormal_completion
from .schemas import ComplexValue, MeasureKind

logger = logging.getLogger(__name__)


class MeasureSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: MeasureKind
    mu: Optional[Tuple[float, ...]] = Field(None, description="Coefficients mu_i (parametrized only)")
    p0: float = Field(0.0, description="Offset P0 (parametrized only)")
    reference_basis: Optional[Context] = Field(None, description="{psi_i} with psi_0 = psi (parametrized only)")

    @model_validator(mode="after")
    def validate_kind_fields(self):
        if self.kind is MeasureKind.PARAMETRIZED:
            if self.mu is None or self.reference_basis is None:
                raise ValueError("A parametrized measure needs mu and a reference basis")
            if len(self.mu) != self.reference_basis.dim:
                raise ValueError(f"mu needs {self.reference_basis.dim} coefficients, got {len(self.mu)}")
        elif self.mu is not None or self.reference_basis is not None or self.p0 != 0.0:
            raise ValueError(f"mu, p0 and reference_basis only apply to parametrized measures, not {self.kind.value}")
        return self

    @classmethod
    def born(cls) -> "MeasureSpec":
        return cls(kind=MeasureKind.BORN)

    @classmethod
    def quartic(cls) -> "MeasureSpec":
        return cls(kind=MeasureKind.QUARTIC)


BORN = MeasureSpec.born()
QUARTIC = MeasureSpec.quartic()


def parametrized_spec(psi: StateVector, mu: Sequence[float], p0: float = 0.0) -> MeasureSpec:
    """Parametrized measure referenced to the orthonormal completion of psi."""
    return MeasureSpec(
        kind=MeasureKind.PARAMETRIZED,
        mu=tuple(float(m) for m in mu),
        p0=float(p0),
        reference_basis=orthonormal_completion(psi),
    )


class MeasureValidity(BaseModel):
    all_real: bool
    all_nonneg: bool
    total: ComplexValue

    @property
    def is_probability(self) -> bool:
        return self.all_real and self.all_nonneg


class Measure(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int
    weights: Tuple[ComplexValue, ...]
    retained: Tuple[int, ...]
    validity: MeasureValidity

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.complex128)

    def extended(self) -> np.ndarray:
        """Weights over the whole context, zero on the excluded outcomes."""
        full = np.zeros(self.dim, dtype=np.complex128)
        full[list(self.retained)] = self.weights
        return full


class ContextStatistics(BaseModel):
    expectation: ComplexValue
    variance: float
    variance_imag: float = Field(0.0, description="|Im| of the variance sum for non-real measures")
    validity: MeasureValidity


def _weights(spec: MeasureSpec, psi: StateVector, context: Context, idx: np.ndarray,
             tol: Tolerances) -> np.ndarray:
    overlaps = context.overlaps(psi)[idx]
    if spec.kind is MeasureKind.BORN:
        return (np.abs(overlaps) ** 2).astype(np.complex128)
    if spec.kind is MeasureKind.QUARTIC:
        return (np.abs(overlaps) ** 4).astype(np.complex128)

    reference = spec.reference_basis
    check_same_dim(reference, context)
    drift = abs(inner(reference[0], psi) - 1.0)
    if drift >= tol.norm:
        raise InvalidMeasureSpec(
            "The first reference vector must be the pre-selected state", {"drift": drift}
        )
    # G[i, k] = <psi_i|w_k>
    G = reference.basis.conj().T @ context.basis[:, idx]
    return (np.asarray(spec.mu) @ G) * overlaps + spec.p0


def evaluate_measure(spec: MeasureSpec, psi: StateVector, context: Context,
                     tol: Tolerances = DEFAULT_TOLERANCES,
                     retained: Optional[Sequence[int]] = None) -> Measure:
    check_same_dim(psi, context)
    if retained is None:
        retained, _ = sample_space(psi, context, WEAK, tol)
    idx = np.asarray(retained, dtype=int)
    w = _weights(spec, psi, context, idx, tol)
    all_real = bool(np.all(np.abs(w.imag) <= tol.real_part))
    validity = MeasureValidity(
        all_real=all_real,
        all_nonneg=all_real and bool(np.all(w.real >= 0.0)),
        total=complex(np.sum(w)),
    )
    return Measure(
        dim=context.dim,
        weights=tuple(complex(x) for x in w),
        retained=tuple(int(i) for i in idx),
        validity=validity,
    )


def statistics(A: Operator, psi: StateVector, context: Context, spec: MeasureSpec, p: CvParams = WEAK,
               tol: Tolerances = DEFAULT_TOLERANCES,
               retained: Optional[Sequence[int]] = None) -> ContextStatistics:
    """Ex(A) and Var(A) in one context.

    Weights and values share one sample space, the one fixed by `p`; outcomes
    whose (a, b) denominator degenerates are dropped from both.
    """
    if retained is None:
        retained, _ = sample_space(psi, context, p, tol)
    measure = evaluate_measure(spec, psi, context, tol, retained)
    values = contextual_values(A, psi, context, p, retained, tol)
    weights = measure.as_array()
    ex = complex(np.sum(weights * values))
    var = complex(np.sum(weights * np.abs(values - ex) ** 2))
    if not measure.validity.all_real:
        logger.debug("Non-real measure in context %s: Var imaginary part %.3e", context.label, var.imag)
    return ContextStatistics(
        expectation=ex,
        variance=var.real,
        variance_imag=abs(var.imag),
        validity=measure.validity,
    )


def expectation(A: Operator, psi: StateVector, context: Context, spec: MeasureSpec, p: CvParams = WEAK,
                tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    """sum_w P(w) lambda_w(A) over the sample space."""
    return statistics(A, psi, context, spec, p, tol).expectation


def variance(A: Operator, psi: StateVector, context: Context, spec: MeasureSpec, p: CvParams = WEAK,
             tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """sum_w P(w) |lambda_w(A) - Ex(A)|^2; the real part when P is not real."""
    return statistics(A, psi, context, spec, p, tol).variance
