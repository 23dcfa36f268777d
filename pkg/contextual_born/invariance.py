"""Context-invariance scans.

Contexts are drawn Haar-randomly, context k from seed + k, and Ex/Var are
compared across them with the sup-norm spread (largest pairwise difference).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import DEFAULT_TOLERANCES, Tolerances
from .contextual import WEAK, CvParams
from .errors import PreconditionFailed
from .hilbert import Operator, StateVector, check_same_dim, haar_random_context
from .measure import ContextStatistics, MeasureSpec, parametrized_spec, statistics
from .schemas import ComplexValue, MeasureKind

logger = logging.getLogger(__name__)

BORN_SPREAD_BOUND = 1e-10


class ScanReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    observable_tag: str
    measure: MeasureKind
    b: ComplexValue
    n_contexts: int
    seed: int
    context_seeds: Tuple[int, ...]
    ex_values: Tuple[ComplexValue, ...]
    var_values: Tuple[float, ...]
    var_imag_values: Tuple[float, ...]
    ex_spread: float = Field(..., description="max over context pairs of |Ex_i - Ex_j|")
    var_spread: float = Field(..., description="max over context pairs of |Var_i - Var_j|")
    quantum_reference: ComplexValue = Field(..., description="<psi|A|psi>")
    reference_deviation: float = Field(..., description="max over contexts of |Ex - <psi|A|psi>|")

    def born_contract_holds(self, bound: float = BORN_SPREAD_BOUND) -> bool:
        return self.ex_spread < bound and self.var_spread < bound and self.reference_deviation < bound


class ContextDependenceWitness(BaseModel):
    first_index: int
    second_index: int
    difference: float


def quantum_expectation(A: Operator, psi: StateVector) -> complex:
    """<psi|A|psi>."""
    check_same_dim(A, psi)
    return complex(np.vdot(psi.amplitudes, A.apply(psi)))


def pairwise_spread(values: Sequence[complex]) -> float:
    v = np.asarray(values)
    if v.size < 2:
        raise PreconditionFailed("A spread needs at least two values")
    return float(np.max(np.abs(v[:, None] - v[None, :])))


def scan_statistics(A: Operator, psi: StateVector, spec: MeasureSpec, p: CvParams, seeds: Sequence[int],
                    max_workers: Optional[int] = None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> List[ContextStatistics]:
    def evaluate(context_seed: int) -> ContextStatistics:
        context = haar_random_context(psi.dim, context_seed, tol=tol)
        return statistics(A, psi, context, spec, p, tol)

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(evaluate, seeds))
    return [evaluate(s) for s in seeds]


def invariance_scan(A: Operator, psi: StateVector, spec: MeasureSpec, p: CvParams = WEAK,
                    n_contexts: int = 100, seed: int = 0, observable_tag: str = "A",
                    max_workers: Optional[int] = None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> ScanReport:
    if n_contexts < 2:
        raise PreconditionFailed(f"An invariance scan needs at least 2 contexts, got {n_contexts}")
    check_same_dim(A, psi)
    seeds = tuple(seed + k for k in range(n_contexts))
    stats = scan_statistics(A, psi, spec, p, seeds, max_workers, tol)

    ex_values = [s.expectation for s in stats]
    var_values = [s.variance for s in stats]
    reference = quantum_expectation(A, psi)
    report = ScanReport(
        observable_tag=observable_tag,
        measure=spec.kind,
        b=p.b,
        n_contexts=n_contexts,
        seed=seed,
        context_seeds=seeds,
        ex_values=tuple(ex_values),
        var_values=tuple(var_values),
        var_imag_values=tuple(s.variance_imag for s in stats),
        ex_spread=pairwise_spread(ex_values),
        var_spread=pairwise_spread(var_values),
        quantum_reference=reference,
        reference_deviation=float(np.max(np.abs(np.asarray(ex_values) - reference))),
    )
    logger.debug(
        "Scan %s/%s over %d contexts: ex_spread=%.3e var_spread=%.3e",
        observable_tag, spec.kind.value, n_contexts, report.ex_spread, report.var_spread,
    )
    return report


def find_context_dependence(A: Operator, psi: StateVector, spec: MeasureSpec, p: CvParams = WEAK,
                            n_contexts: int = 100, seed: int = 0, threshold: float = 1e-3,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> Optional[ContextDependenceWitness]:
    """First pair of contexts, in draw order, whose expectations differ by more than `threshold`."""
    seen: List[complex] = []
    for k in range(n_contexts):
        context = haar_random_context(psi.dim, seed + k, tol=tol)
        ex = statistics(A, psi, context, spec, p, tol).expectation
        for j, earlier in enumerate(seen):
            if abs(ex - earlier) > threshold:
                return ContextDependenceWitness(first_index=j, second_index=k, difference=abs(ex - earlier))
        seen.append(ex)
    return None


def parametrized_sweep(A: Operator, psi: StateVector, epsilons: Sequence[float], index: int = 1,
                       p: CvParams = WEAK, n_contexts: int = 100, seed: int = 0,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> List[ScanReport]:
    """Scans of the parametrized family mu = delta_0 + eps * delta_index, P0 = 0."""
    if not 0 < index < psi.dim:
        raise PreconditionFailed(f"index must perturb a coefficient other than mu_0, got {index}")
    reports = []
    for eps in epsilons:
        mu = np.zeros(psi.dim)
        mu[0] = 1.0
        mu[index] = eps
        spec = parametrized_spec(psi, mu)
        reports.append(
            invariance_scan(A, psi, spec, p, n_contexts, seed, observable_tag=f"mu{index}={eps:g}", tol=tol)
        )
    return reports
