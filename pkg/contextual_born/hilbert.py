"""Finite-dimensional Hilbert-space substrate.

States, operators and contexts are immutable values. A context is the
orthonormal eigenbasis of a maximal abelian subalgebra, stored as the columns
of a unitary matrix so that every per-outcome quantity can be evaluated for
the whole context in one matrix product.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    DimensionMismatch,
    InvalidDimension,
    NotHermitian,
    NotOrthonormal,
    PreconditionFailed,
    ZeroVector,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[complex], np.ndarray]


def _check_dim(dim: int, tol: Tolerances) -> None:
    if dim < 2:
        raise InvalidDimension(f"Dimension must be at least 2, got {dim}", {"dim": dim})
    if dim > tol.max_dim:
        raise InvalidDimension(
            f"Dimension {dim} exceeds the cap of {tol.max_dim}", {"dim": dim, "max_dim": tol.max_dim}
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """A unit vector. Build one from raw amplitudes with `normalize`."""

    amplitudes: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise DimensionMismatch(f"State amplitudes must be one-dimensional, got shape {amps.shape}")
        _check_dim(amps.shape[0], self.tol)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.tol.norm:
            raise PreconditionFailed(
                f"State has norm {norm!r}; use normalize() for raw vectors", {"norm": float(norm)}
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __len__(self) -> int:
        return self.dim


@dataclass(frozen=True, eq=False)
class Operator:
    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"Operator must be a square matrix, got shape {m.shape}")
        _check_dim(m.shape[0], self.tol)
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def is_hermitian(self) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) < self.tol.hermitian)

    def require_hermitian(self, name: str = "operator") -> "Operator":
        if not self.is_hermitian:
            raise NotHermitian(f"The {name} must be Hermitian")
        return self

    def __add__(self, other: "Operator") -> "Operator":
        check_same_dim(self, other)
        return Operator(self.entries + other.entries, tol=self.tol)

    def __sub__(self, other: "Operator") -> "Operator":
        check_same_dim(self, other)
        return Operator(self.entries - other.entries, tol=self.tol)

    def __matmul__(self, other: "Operator") -> "Operator":
        check_same_dim(self, other)
        return Operator(self.entries @ other.entries, tol=self.tol)

    def scaled(self, factor: complex) -> "Operator":
        return Operator(factor * self.entries, tol=self.tol)

    def apply(self, psi: StateVector) -> np.ndarray:
        check_same_dim(self, psi)
        return self.entries @ psi.amplitudes

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=np.complex128))

    @classmethod
    def zeros(cls, dim: int) -> "Operator":
        return cls(np.zeros((dim, dim), dtype=np.complex128))

    @classmethod
    def diagonal(cls, values: ArrayLike) -> "Operator":
        return cls(np.diag(np.asarray(values, dtype=np.complex128)))


@dataclass(frozen=True, eq=False)
class Context:
    """Ordered orthonormal basis; column i of `basis` is the outcome |w_i>."""

    basis: np.ndarray
    label: Optional[str] = None
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        w = np.array(self.basis, dtype=np.complex128)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch(f"A context needs N vectors of dimension N, got shape {w.shape}")
        _check_dim(w.shape[0], self.tol)
        residual = float(np.max(np.abs(w.conj().T @ w - np.eye(w.shape[0]))))
        if residual >= self.tol.orthonormal:
            raise NotOrthonormal(
                f"Context vectors are not orthonormal (residual {residual:.3e})", {"residual": residual}
            )
        object.__setattr__(self, "basis", _frozen(w))

    @classmethod
    def from_states(cls, states: Sequence[StateVector], label: Optional[str] = None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> "Context":
        return cls(np.column_stack([s.amplitudes for s in states]), label=label, tol=tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __getitem__(self, index: int) -> StateVector:
        return StateVector(self.basis[:, index], tol=self.tol)

    def __iter__(self) -> Iterator[StateVector]:
        return (self[i] for i in range(self.dim))

    @property
    def states(self) -> Tuple[StateVector, ...]:
        return tuple(self)

    def overlaps(self, psi: StateVector) -> np.ndarray:
        """<w_i|psi> for every outcome."""
        check_same_dim(self, psi)
        return self.basis.conj().T @ psi.amplitudes


def check_same_dim(*items) -> int:
    dims = {item.dim for item in items}
    if len(dims) != 1:
        raise DimensionMismatch(f"Dimensions do not match: {sorted(dims)}", {"dims": sorted(dims)})
    return dims.pop()


def normalize(v: ArrayLike, tol: Tolerances = DEFAULT_TOLERANCES) -> StateVector:
    amps = np.asarray(v, dtype=np.complex128)
    norm = np.linalg.norm(amps)
    if norm <= tol.zero_vector:
        raise ZeroVector(f"Cannot normalize a vector of norm {norm!r}", {"norm": float(norm)})
    return StateVector(amps / norm, tol=tol)


def inner(u: StateVector, v: StateVector) -> complex:
    """<u|v>, antilinear in the first argument."""
    check_same_dim(u, v)
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def projector(psi: StateVector) -> Operator:
    return Operator(np.outer(psi.amplitudes, psi.amplitudes.conj()), tol=psi.tol)


def gram_matrix(context: Context) -> np.ndarray:
    return context.basis.conj().T @ context.basis


def in_basis(op: Operator, context: Context) -> np.ndarray:
    """Matrix elements <w_i|op|w_j> of `op` in the context basis."""
    check_same_dim(op, context)
    return context.basis.conj().T @ op.entries @ context.basis


def computational_context(dim: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Context:
    return Context(np.eye(dim, dtype=np.complex128), label="computational", tol=tol)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_random_context(dim: int, seed: int, label: Optional[str] = None,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> Context:
    """Columns of a Haar-distributed unitary, deterministic in `seed`.

    QR of a complex Gaussian matrix is only Haar once the phases of R's
    diagonal are divided out.
    """
    _check_dim(dim, tol)
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(_complex_gaussian(rng, (dim, dim)))
    d = np.diag(r)
    mag = np.abs(d)
    phases = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    return Context(q * phases, label=label if label is not None else f"haar-{seed}", tol=tol)


def random_state(dim: int, seed: Union[int, np.random.SeedSequence, np.random.Generator],
                 tol: Tolerances = DEFAULT_TOLERANCES) -> StateVector:
    _check_dim(dim, tol)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return normalize(_complex_gaussian(rng, dim), tol=tol)


def random_hermitian(dim: int, rng: np.random.Generator, tol: Tolerances = DEFAULT_TOLERANCES) -> Operator:
    g = _complex_gaussian(rng, (dim, dim))
    return Operator((g + g.conj().T) / 2.0, tol=tol)


def orthonormal_completion(psi: StateVector) -> Context:
    """Orthonormal basis whose first vector is psi itself."""
    dim = psi.dim
    seed_matrix = np.column_stack([psi.amplitudes, np.eye(dim, dtype=np.complex128)])
    q, r = np.linalg.qr(seed_matrix)
    q = q[:, :dim].copy()
    # psi = q0 * r00 with |r00| = 1; undo the phase so column 0 is psi.
    q[:, 0] *= r[0, 0]
    return Context(q, label="completion", tol=psi.tol)


def hermitian_evolution(H: Operator, t: float, direction: int = -1) -> Operator:
    """exp(direction * i * H * t) through the eigendecomposition of H."""
    H.require_hermitian("Hamiltonian")
    if direction not in (-1, 1):
        raise PreconditionFailed(f"direction must be +1 or -1, got {direction}")
    w, v = np.linalg.eigh(H.entries)
    phases = np.exp(direction * 1j * w * t)
    return Operator((v * phases) @ v.conj().T, tol=H.tol)
