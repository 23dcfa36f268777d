"""Numerical uniqueness of the Born point.

The unknowns are the contextual-value coefficient b (a is pinned to 1, since
the value only depends on b/a) and the parametrized measure (mu, P0):

    P(w) = sum_i mu_i <psi_i|w><w|psi> + P0

The residual penalizes every way the pair can fail to be a context-invariant
probability measure over a fixed sample of contexts:

    sum_A [spread(Ex_A) + spread(Var_A)]
        + w_norm * mean_C |sum_w P(w) - 1|^2
        + w_real * mean_C sum_w |Im P(w)|^2

It vanishes at b = 0, mu = delta_0, P0 = 0 and is minimized with a bounded
Nelder-Mead simplex, since the spreads make it non-smooth. Runs that stall
are restarted from fresh points: the zero measure (mu = 0, P0 = 0) is a
local minimum with residual w_norm whenever b != 0.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import Bounds, minimize

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NotConverged, PreconditionFailed
from .hilbert import (
    Context,
    Operator,
    StateVector,
    check_same_dim,
    haar_random_context,
    orthonormal_completion,
    projector,
    random_hermitian,
    random_state,
)
from .schemas import ComplexValue

logger = logging.getLogger(__name__)

MIN_DIM, MAX_DIM = 2, 8
B_BOX, MU_BOX, P0_BOX = 1.0, 4.0, 2.0


class SolverParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    b: ComplexValue = 0j
    mu: Tuple[float, ...]
    p0: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.mu)

    @classmethod
    def born(cls, dim: int) -> "SolverParams":
        return cls(b=0j, mu=(1.0,) + (0.0,) * (dim - 1), p0=0.0)

    def pack(self) -> np.ndarray:
        """[Re b, Im b, mu_0 .. mu_{N-1}, P0]."""
        return np.array([self.b.real, self.b.imag, *self.mu, self.p0], dtype=float)

    @classmethod
    def unpack(cls, vec: Sequence[float]) -> "SolverParams":
        vec = np.asarray(vec, dtype=float)
        return cls(b=complex(vec[0], vec[1]), mu=tuple(float(m) for m in vec[2:-1]), p0=float(vec[-1]))

    def distance_to_born(self) -> float:
        """Sup-norm distance to the Born point.

        (mu, P0) are first rescaled so that sum_w P(w) = mu_0 + N * P0 equals 1,
        which is the normalization that fixes mu_0.
        """
        mu = np.asarray(self.mu)
        p0 = self.p0
        total = mu[0] + self.dim * p0
        if abs(total) > 1e-12:
            mu, p0 = mu / total, p0 / total
        target = np.zeros(self.dim)
        target[0] = 1.0
        return float(max(abs(self.b), np.max(np.abs(mu - target)), abs(p0)))


class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(20000, description="Simplex iteration budget across all restarts", ge=1)
    tol: float = Field(1e-9, description="Residual below which the run counts as converged", gt=0)
    n_contexts: int = Field(10, ge=2)
    n_observables: int = Field(5, ge=1)
    max_restarts: int = Field(16, ge=0)
    run_iter: int = Field(4000, description="Iteration cap for a single simplex run", ge=1)
    refine_below: float = Field(1e-3, description="Stalls below this residual are polished, not restarted", gt=0)
    w_norm: float = Field(1.0, ge=0)
    w_real: float = Field(1.0, ge=0)
    start: Optional[SolverParams] = Field(None, description="Start point; drawn from the seed when omitted")


class SolverResult(BaseModel):
    final_params: SolverParams
    residual_trajectory: List[float]
    converged: bool
    distance_to_born: float
    final_residual: float
    iterations: int
    restarts: int
    dim: int
    seed: int

    def require_converged(self) -> "SolverResult":
        if not self.converged:
            raise NotConverged(
                f"Residual {self.final_residual:.3e} after {self.iterations} iterations",
                {"final_residual": self.final_residual, "iterations": self.iterations},
            )
        return self


class ResidualProblem:
    """Residual with every parameter-independent quantity precomputed.

    Per context c, outcome k and observable A:
        o[c, k]    = <w_k|psi>
        G[c, i, k] = <psi_i|w_k>
        x[A, c, k] = <w_k|A|psi>
        y[A, c, k] = <w_k|A^dagger|psi>,  so <psi|A|w_k> = conj(y)
    """

    def __init__(self, psi: StateVector, observables: Sequence[Operator], contexts: Sequence[Context],
                 reference_basis: Optional[Context] = None, w_norm: float = 1.0, w_real: float = 1.0,
                 tol: Tolerances = DEFAULT_TOLERANCES):
        if len(contexts) < 2:
            raise PreconditionFailed("The residual needs at least 2 contexts")
        if not observables:
            raise PreconditionFailed("The residual needs at least 1 observable")
        check_same_dim(psi, *observables, *contexts)
        reference = reference_basis if reference_basis is not None else orthonormal_completion(psi)
        check_same_dim(psi, reference)

        self.dim = psi.dim
        self.w_norm = w_norm
        self.w_real = w_real
        self.cutoff = tol.overlap_cutoff

        w_dag = np.stack([c.basis.conj().T for c in contexts])
        self.overlaps = w_dag @ psi.amplitudes
        self.mask = np.abs(self.overlaps) > self.cutoff
        self.gram = np.stack([reference.basis.conj().T @ c.basis for c in contexts])
        a_psi = np.stack([a.entries @ psi.amplitudes for a in observables])
        a_dag_psi = np.stack([a.entries.conj().T @ psi.amplitudes for a in observables])
        self.x = np.einsum("ckn,an->ack", w_dag, a_psi)
        self.y = np.einsum("ckn,an->ack", w_dag, a_dag_psi)

    def weights(self, params: SolverParams) -> np.ndarray:
        w = np.einsum("i,cik->ck", np.asarray(params.mu), self.gram) * self.overlaps + params.p0
        return np.where(self.mask, w, 0.0)

    def __call__(self, vec: Sequence[float]) -> float:
        return self.evaluate(SolverParams.unpack(vec))

    def evaluate(self, params: SolverParams) -> float:
        b = params.b
        dens = self.overlaps + b * np.conj(self.overlaps)
        if np.any(np.abs(dens[self.mask]) <= self.cutoff):
            return math.inf
        safe = np.where(self.mask, dens, 1.0)
        values = np.where(self.mask, (self.x + b * np.conj(self.y)) / safe, 0.0)

        weights = self.weights(params)
        ex = np.sum(weights * values, axis=-1)
        var = np.sum(weights * np.abs(values - ex[..., None]) ** 2, axis=-1).real

        ex_spread = np.max(np.abs(ex[:, :, None] - ex[:, None, :]), axis=(1, 2))
        var_spread = np.max(var, axis=1) - np.min(var, axis=1)
        totals = np.sum(weights, axis=-1)
        norm_penalty = np.mean(np.abs(totals - 1.0) ** 2)
        real_penalty = np.mean(np.sum(weights.imag ** 2, axis=-1))
        return float(
            np.sum(ex_spread + var_spread) + self.w_norm * norm_penalty + self.w_real * real_penalty
        )


def residual(params: SolverParams, psi: StateVector, observables: Sequence[Operator],
             contexts: Sequence[Context], reference_basis: Optional[Context] = None,
             w_norm: float = 1.0, w_real: float = 1.0, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Invariance-violation penalty at `params`; +inf when a denominator degenerates."""
    if params.dim != psi.dim:
        raise PreconditionFailed(f"params carry {params.dim} coefficients for a dimension-{psi.dim} problem")
    problem = ResidualProblem(psi, observables, contexts, reference_basis, w_norm, w_real, tol)
    return problem.evaluate(params)


def constraint_residual(psi: StateVector, A: Operator, context: Context,
                        reference_basis: Optional[Context] = None) -> float:
    """max_i |sum_w <psi_i|w><w|A|psi> - <psi_i|A|psi>|, summed over the whole context."""
    check_same_dim(psi, A, context)
    reference = reference_basis if reference_basis is not None else orthonormal_completion(psi)
    r_dag = reference.basis.conj().T
    a_psi = A.apply(psi)
    through_context = r_dag @ context.basis @ (context.basis.conj().T @ a_psi)
    return float(np.max(np.abs(through_context - r_dag @ a_psi)))


def stationarity_residual(params: SolverParams, psi: StateVector, context: Context,
                          reference_basis: Optional[Context] = None,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """max_w |P(w) / (<w|psi> + b<psi|w>) - sum_i mu_i <psi_i|w>| over the sample space."""
    check_same_dim(psi, context)
    reference = reference_basis if reference_basis is not None else orthonormal_completion(psi)
    o = context.overlaps(psi)
    mask = np.abs(o) > tol.overlap_cutoff
    dens = o + params.b * np.conj(o)
    if np.any(np.abs(dens[mask]) <= tol.overlap_cutoff):
        return math.inf
    multiplier_sum = np.asarray(params.mu) @ (reference.basis.conj().T @ context.basis)
    weights = multiplier_sum * o + params.p0
    gap = weights[mask] / dens[mask] - multiplier_sum[mask]
    return float(np.max(np.abs(gap)))


def _random_start(dim: int, rng: np.random.Generator) -> SolverParams:
    radius = math.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return SolverParams(
        b=complex(radius * math.cos(angle), radius * math.sin(angle)),
        mu=tuple(rng.uniform(-2.0, 2.0, dim)),
        p0=float(rng.uniform(-1.0, 1.0)),
    )


def search_bounds(dim: int) -> Bounds:
    """Box for [Re b, Im b, mu, P0].

    |Re b|, |Im b| <= 1 keeps a = 1 the dominant coefficient; an unbounded b
    drifts to the a = 0 gauge, where the residual also vanishes.
    """
    lower = np.array([-B_BOX, -B_BOX, *([-MU_BOX] * dim), -P0_BOX])
    return Bounds(lower, -lower)


def _simplex(x0: np.ndarray, scale: float, bounds: Bounds) -> np.ndarray:
    """Axis simplex around x0, each step pointing into the box."""
    steps = np.where(x0 + scale <= bounds.ub, scale, -scale)
    return np.vstack([x0, x0 + np.diag(steps)])


def build_problem(dim: int, seed: int, opts: SolverOptions,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[ResidualProblem, np.random.Generator]:
    """Draw psi, observables and contexts for a seed; returns the problem and the start-point stream."""
    psi_seq, obs_seq, ctx_seq, start_seq = np.random.SeedSequence(seed).spawn(4)
    psi = random_state(dim, np.random.default_rng(psi_seq), tol=tol)
    obs_rng = np.random.default_rng(obs_seq)
    observables = [random_hermitian(dim, obs_rng, tol=tol) for _ in range(opts.n_observables - 1)]
    observables.append(projector(psi))
    ctx_seeds = np.random.default_rng(ctx_seq).integers(0, 2**63, size=opts.n_contexts)
    contexts = [haar_random_context(dim, int(s), tol=tol) for s in ctx_seeds]
    problem = ResidualProblem(psi, observables, contexts, None, opts.w_norm, opts.w_real, tol)
    return problem, np.random.default_rng(start_seq)


def solve_uniqueness(dim: int, seed: int, opts: SolverOptions = SolverOptions(),
                     tol: Tolerances = DEFAULT_TOLERANCES) -> SolverResult:
    """Minimize the residual inside the search box.

    A simplex run that stops short of the budget has stalled. If it stalled
    above `refine_below`, the next run starts from a fresh point of the start
    stream; otherwise the best point is polished with a smaller simplex.
    """
    if not MIN_DIM <= dim <= MAX_DIM:
        raise PreconditionFailed(f"dim must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}", {"dim": dim})
    problem, start_rng = build_problem(dim, seed, opts, tol)
    start = opts.start if opts.start is not None else _random_start(dim, start_rng)
    if start.dim != dim:
        raise PreconditionFailed(f"start point has {start.dim} coefficients, expected {dim}")

    bounds = search_bounds(dim)
    x0 = np.clip(start.pack(), bounds.lb, bounds.ub)
    best_x, best_f = x0, problem(x0)
    trajectory = [best_f]
    iterations = runs = 0
    scale = 0.5

    def record(intermediate_result):
        trajectory.append(min(trajectory[-1], float(intermediate_result.fun)))

    while best_f >= opts.tol and iterations < opts.max_iter and runs <= opts.max_restarts:
        budget = min(opts.run_iter, opts.max_iter - iterations)
        result = minimize(
            problem,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            callback=record,
            options={
                "maxiter": budget,
                "initial_simplex": _simplex(x0, scale, bounds),
                "xatol": 1e-11,
                "fatol": opts.tol * 1e-3,
                "adaptive": x0.size > 5,
            },
        )
        iterations += int(result.nit)
        improved = result.fun < best_f
        if improved:
            best_x, best_f = np.asarray(result.x), float(result.fun)
        stalled = int(result.nit) < budget
        logger.debug("Simplex run %d ended at residual %.3e after %d iterations", runs, result.fun, result.nit)
        runs += 1
        if improved and (best_f < opts.refine_below or not stalled):
            x0, scale = best_x, (0.05 if best_f < opts.refine_below else 0.2)
        else:
            x0, scale = _random_start(dim, start_rng).pack(), 0.5

    final = SolverParams.unpack(best_x)
    converged = best_f < opts.tol
    if not converged:
        logger.warning("Uniqueness solve (dim=%d, seed=%d) stopped at residual %.3e", dim, seed, best_f)
    return SolverResult(
        final_params=final,
        residual_trajectory=trajectory,
        converged=converged,
        distance_to_born=final.distance_to_born(),
        final_residual=best_f,
        iterations=iterations,
        restarts=max(runs - 1, 0),
        dim=dim,
        seed=seed,
    )
