"""Worked settings: the envariance example and weak values along a Heisenberg trajectory."""
import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field

from .config import DEFAULT_TOLERANCES, Tolerances
from .contextual import WEAK, assignment, weak_value
from .errors import DegenerateDenominator, PreconditionFailed
from .hilbert import Operator, StateVector, computational_context, hermitian_evolution, inner, normalize
from .measure import BORN, evaluate_measure, expectation
from .schemas import ComplexValue

logger = logging.getLogger(__name__)


class ZurekReport(BaseModel):
    weak_values: Tuple[ComplexValue, ComplexValue]
    probabilities: Tuple[float, float]
    symmetry_probabilities: Tuple[float, float] = Field(
        ..., description="P(x1), P(x2) solved from Ex(A x 1) = 0 and P(x1) + P(x2) = 1"
    )
    swap_symmetry_residual: float = Field(..., description="|Ex(A x 1)|")
    swap_state_residual: float = Field(..., description="||SWAP psi - psi||")
    excluded_outcomes: Tuple[int, ...]


class Trajectory(BaseModel):
    times: Tuple[float, ...]
    values: Tuple[ComplexValue, ...]
    eigen_index: int
    endpoint_eigenvalue: float
    endpoint_residual: float


def _product_index(s: int, e: int) -> int:
    """Position of |s_{s+1}>|e_{e+1}> in the 2 x 2 product basis."""
    return 2 * s + e


def zurek_demo(tol: Tolerances = DEFAULT_TOLERANCES) -> ZurekReport:
    raw = np.zeros(4, dtype=np.complex128)
    raw[_product_index(0, 0)] = raw[_product_index(1, 1)] = 1.0
    psi = normalize(raw, tol=tol)

    system_observable = np.diag([1.0, -1.0])  # |s1><s1| - |s2><s2|
    A = Operator(np.kron(system_observable, np.eye(2)), tol=tol)
    context = computational_context(4, tol=tol)
    x1, x2 = _product_index(0, 0), _product_index(1, 1)

    values = assignment(A, psi, context, WEAK, tol)
    lambdas = (values.value_at(x1), values.value_at(x2))
    measure = evaluate_measure(BORN, psi, context, tol)
    weights = dict(zip(measure.retained, measure.weights))

    # SWAP exchanges 1 <-> 2 in system and environment at once.
    swap = np.zeros((4, 4))
    for s in (0, 1):
        for e in (0, 1):
            swap[_product_index(1 - s, 1 - e), _product_index(s, e)] = 1.0
    swap_state_residual = float(np.linalg.norm(swap @ psi.amplitudes - psi.amplitudes))

    # Ex(A x 1) = P1 lambda1 + P2 lambda2 = 0 by symmetry, with P1 + P2 = 1.
    system = np.array([[lambdas[0].real, lambdas[1].real], [1.0, 1.0]])
    symmetric = np.linalg.solve(system, np.array([0.0, 1.0]))

    return ZurekReport(
        weak_values=lambdas,
        probabilities=(weights[x1].real, weights[x2].real),
        symmetry_probabilities=(float(symmetric[0]), float(symmetric[1])),
        swap_symmetry_residual=abs(expectation(A, psi, context, BORN, WEAK, tol)),
        swap_state_residual=swap_state_residual,
        excluded_outcomes=tuple(sorted(values.excluded)),
    )


def heisenberg_operator(A: Operator, H: Operator, t: float) -> Operator:
    """A(t) = U(t)^dagger A U(t) with U(t) = exp(-iHt)."""
    U = hermitian_evolution(H, t, direction=-1).entries
    return Operator(U.conj().T @ A.entries @ U, tol=A.tol)


def ordered_eigenbasis(M: Operator) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a Hermitian operator, ascending; ties broken by the rounded eigenvector entries."""
    M.require_hermitian()
    w, v = np.linalg.eigh((M.entries + M.entries.conj().T) / 2.0)

    def key(i):
        entries = tuple(x for z in v[:, i] for x in (round(z.real, 9), round(z.imag, 9)))
        return round(float(w[i]), 9), entries

    order = sorted(range(len(w)), key=key)
    return w[order], v[:, order]


def heisenberg_trajectory(H: Operator, A: Operator, psi: StateVector, T: float, steps: int,
                          eigen_index: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """Weak value <a|A(t)|psi>/<a|psi> on a uniform grid over [0, T], <a| an eigenstate of A(T)."""
    H.require_hermitian("Hamiltonian")
    A.require_hermitian("observable")
    if steps < 1:
        raise PreconditionFailed(f"steps must be positive, got {steps}")
    if not 0 <= eigen_index < A.dim:
        raise PreconditionFailed(f"eigen_index {eigen_index} is outside 0..{A.dim - 1}")

    eigenvalues, eigenvectors = ordered_eigenbasis(heisenberg_operator(A, H, T))
    a = float(eigenvalues[eigen_index])
    post = StateVector(eigenvectors[:, eigen_index], tol=tol)
    overlap = abs(inner(post, psi))
    if overlap <= tol.overlap_cutoff:
        raise DegenerateDenominator(
            f"Eigenvector {eigen_index} of A(T) is orthogonal to psi; pick a different eigen_index",
            {"eigen_index": eigen_index, "overlap": overlap},
        )

    times = np.linspace(0.0, T, steps + 1)
    values = [weak_value(heisenberg_operator(A, H, float(t)), psi, post, tol) for t in times]
    endpoint_residual = abs(values[-1] - a)
    logger.debug("Heisenberg trajectory: eigenvalue %.6f, endpoint residual %.3e", a, endpoint_residual)
    return Trajectory(
        times=tuple(float(t) for t in times),
        values=tuple(values),
        eigen_index=eigen_index,
        endpoint_eigenvalue=a,
        endpoint_residual=endpoint_residual,
    )
