"""Contextual values of observables.

The general value is fixed by a pair (a, b):

    W_w = a|psi><w| + b|w><psi|,   lambda_w(A) = Tr[W_w A] / Tr[W_w]

and the weak value is the case b = 0. W_w's transverse part is taken to be
zero from the start; the (a, b) form is the parametrization everything here
works with.
"""
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DegenerateDenominator, NotInSubalgebra, PreconditionFailed
from .hilbert import (
    Context,
    Operator,
    StateVector,
    check_same_dim,
    haar_random_context,
    in_basis,
    inner,
    orthonormal_completion,
    projector,
    random_state,
)
from .schemas import ComplexValue

logger = logging.getLogger(__name__)

ORTHOGONAL = "orthogonal to the pre-selected state"
DEGENERATE = "degenerate (a, b) denominator"


class CvParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: ComplexValue = Field(1 + 0j, description="Coefficient of |psi><w|")
    b: ComplexValue = Field(0j, description="Coefficient of |w><psi|")

    @model_validator(mode="after")
    def validate_not_both_zero(self):
        if abs(self.a) + abs(self.b) == 0:
            raise ValueError("a and b cannot both be zero")
        return self

    @property
    def is_weak(self) -> bool:
        return self.b == 0


WEAK = CvParams()


class ContextualAssignment(BaseModel):
    """lambda_w(A) for every outcome of a context that lies in the sample space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    context: Context
    pre_state: StateVector
    values: Tuple[ComplexValue, ...]
    retained: Tuple[int, ...]
    excluded: Dict[int, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_lengths(self):
        if len(self.values) != len(self.retained):
            raise ValueError("One value is required per retained outcome")
        return self

    def value_at(self, index: int) -> complex:
        return self.values[self.retained.index(index)]


class ProductRuleSearch(BaseModel):
    max_residual: float
    draw: Optional[int] = None
    omega_index: Optional[int] = None
    draws: int
    skipped: int = 0


def denominators(overlaps: np.ndarray, p: CvParams) -> np.ndarray:
    """a<w|psi> + b<psi|w> for an array of overlaps <w|psi>."""
    return p.a * overlaps + p.b * np.conj(overlaps)


def sample_space(psi: StateVector, context: Context, p: CvParams = WEAK,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[Tuple[int, ...], Dict[int, str]]:
    """Indices of the outcomes kept in the sample space, and the reasons for the others.

    An outcome is kept when <w|psi> is above the overlap cutoff; with b != 0 it
    must also leave a usable denominator.
    """
    overlaps = context.overlaps(psi)
    dens = denominators(overlaps, p)
    retained, excluded = [], {}
    for i, (o, d) in enumerate(zip(overlaps, dens)):
        if abs(o) <= tol.overlap_cutoff:
            excluded[i] = ORTHOGONAL
        elif abs(d) <= tol.overlap_cutoff:
            excluded[i] = DEGENERATE
        else:
            retained.append(i)
    return tuple(retained), excluded


def contextual_values(A: Operator, psi: StateVector, context: Context, p: CvParams = WEAK,
                      retained: Optional[Sequence[int]] = None,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Values (a<w|A|psi> + b<psi|A|w>) / (a<w|psi> + b<psi|w>) for all retained outcomes at once."""
    check_same_dim(A, psi, context)
    if retained is None:
        retained, _ = sample_space(psi, context, p, tol)
    idx = np.asarray(retained, dtype=int)
    w_dag = context.basis.conj().T[idx]
    x = w_dag @ (A.entries @ psi.amplitudes)
    y = w_dag @ (A.entries.conj().T @ psi.amplitudes)
    o = w_dag @ psi.amplitudes
    dens = denominators(o, p)
    bad = np.abs(dens) <= tol.overlap_cutoff
    if np.any(bad):
        raise DegenerateDenominator(
            "Outcome excluded from the sample space", {"indices": idx[bad].tolist()}
        )
    return (p.a * x + p.b * np.conj(y)) / dens


def w_operator(psi: StateVector, omega: StateVector, p: CvParams) -> Operator:
    check_same_dim(psi, omega)
    ket_psi, ket_omega = psi.amplitudes, omega.amplitudes
    entries = p.a * np.outer(ket_psi, ket_omega.conj()) + p.b * np.outer(ket_omega, ket_psi.conj())
    return Operator(entries, tol=psi.tol)


def contextual_value_general(A: Operator, psi: StateVector, omega: StateVector, p: CvParams,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    """Tr[W_w A] / Tr[W_w]."""
    check_same_dim(A, psi, omega)
    W = w_operator(psi, omega, p)
    denominator = complex(np.trace(W.entries))
    if abs(denominator) <= tol.overlap_cutoff:
        raise DegenerateDenominator(
            "a<w|psi> + b<psi|w> vanishes: the outcome is outside the sample space",
            {"denominator": [denominator.real, denominator.imag]},
        )
    return complex(np.trace(W.entries @ A.entries)) / denominator


def weak_value(A: Operator, psi: StateVector, omega: StateVector,
               tol: Tolerances = DEFAULT_TOLERANCES) -> complex:
    """<w|A|psi> / <w|psi>."""
    check_same_dim(A, psi, omega)
    overlap = inner(omega, psi)
    if abs(overlap) <= tol.overlap_cutoff:
        raise DegenerateDenominator(
            "Post-selected state is orthogonal to the pre-selected state", {"overlap": abs(overlap)}
        )
    return complex(np.vdot(omega.amplitudes, A.apply(psi))) / overlap


def check_sum_rule(A: Operator, B: Operator, psi: StateVector, omega: StateVector, p: CvParams,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """|lambda(A+B) - lambda(A) - lambda(B)|."""
    value = lambda op: contextual_value_general(op, psi, omega, p, tol)
    return abs(value(A + B) - value(A) - value(B))


def _require_diagonal(op: Operator, context: Context, name: str, tol: Tolerances) -> None:
    m = in_basis(op, context)
    off_diagonal = float(np.max(np.abs(m - np.diag(np.diag(m)))))
    if off_diagonal >= tol.subalgebra:
        raise NotInSubalgebra(
            f"{name} is not diagonal in the context (largest off-diagonal element {off_diagonal:.3e})",
            {"off_diagonal": off_diagonal},
        )


def check_product_rule(T: Operator, S: Operator, context: Context, psi: StateVector, omega_index: int,
                       p: CvParams, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """|lambda(TS) - lambda(T) lambda(S)| at one outcome of the context."""
    check_same_dim(T, S, context, psi)
    _require_diagonal(T, context, "T", tol)
    _require_diagonal(S, context, "S", tol)
    if not 0 <= omega_index < context.dim:
        raise PreconditionFailed(f"omega_index {omega_index} is outside the context")
    omega = context[omega_index]
    value = lambda op: contextual_value_general(op, psi, omega, p, tol)
    return abs(value(T @ S) - value(T) * value(S))


def check_initial_condition(psi: StateVector, omega: StateVector, p: CvParams,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Largest violation of lambda(|psi><psi|) = 1 and lambda(|psi_perp><psi_perp|) = 0.

    psi_perp ranges over the orthonormal completion of psi.
    """
    completion = orthonormal_completion(psi)
    residual = abs(contextual_value_general(projector(psi), psi, omega, p, tol) - 1.0)
    for perp in completion.states[1:]:
        residual = max(residual, abs(contextual_value_general(projector(perp), psi, omega, p, tol)))
    return residual


def assignment(A: Operator, psi: StateVector, context: Context, p: CvParams = WEAK,
               tol: Tolerances = DEFAULT_TOLERANCES) -> ContextualAssignment:
    retained, excluded = sample_space(psi, context, p, tol)
    if excluded:
        logger.debug("Excluded outcomes %s from context %s", sorted(excluded), context.label)
    values = contextual_values(A, psi, context, p, retained, tol)
    return ContextualAssignment(
        context=context,
        pre_state=psi,
        values=tuple(complex(v) for v in values),
        retained=retained,
        excluded=excluded,
    )


def find_product_rule_violation(dim: int = 3, p: CvParams = CvParams(a=1, b=1), draws: int = 100,
                                seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> ProductRuleSearch:
    """Search random context-diagonal pairs (T, S) for the largest product-rule residual.

    Every operator diagonal in the context has lambda_w(T) = T_ww for any (a, b),
    so the search is expected to come back empty-handed at rounding level.
    """
    best = ProductRuleSearch(max_residual=0.0, draws=draws)
    skipped = 0
    for k in range(draws):
        context = haar_random_context(dim, seed + k, tol=tol)
        rng = np.random.default_rng([seed, k])
        psi = random_state(dim, rng, tol=tol)
        W = context.basis
        T = Operator(W @ np.diag(rng.uniform(-2, 2, dim)) @ W.conj().T, tol=tol)
        S = Operator(W @ np.diag(rng.uniform(-2, 2, dim)) @ W.conj().T, tol=tol)
        for i in range(dim):
            try:
                r = check_product_rule(T, S, context, psi, i, p, tol)
            except DegenerateDenominator:
                skipped += 1
                continue
            if r > best.max_residual:
                best = ProductRuleSearch(max_residual=r, draw=k, omega_index=i, draws=draws)
    logger.debug("Product-rule search: max residual %.3e over %d draws", best.max_residual, draws)
    return best.model_copy(update={"skipped": skipped})
