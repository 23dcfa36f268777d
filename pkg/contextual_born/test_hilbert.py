import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from contextual_born.config import Tolerances
from contextual_born.errors import (
    DimensionMismatch,
    InvalidDimension,
    NotHermitian,
    NotOrthonormal,
    PreconditionFailed,
    ZeroVector,
)
from contextual_born.hilbert import (
    Context,
    Operator,
    StateVector,
    computational_context,
    gram_matrix,
    haar_random_context,
    hermitian_evolution,
    in_basis,
    inner,
    normalize,
    orthonormal_completion,
    projector,
    random_hermitian,
    random_state,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ((2, 0), (1, 0)),
        ((1, 1), (1 / math.sqrt(2), 1 / math.sqrt(2))),
        ((0, 3j), (0, 1j)),
    ],
)
def test_normalize(raw, expected):
    psi = normalize(raw)
    np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-15)
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-12)


def test_normalize_rejects_zero_vector():
    with pytest.raises(ZeroVector) as exc:
        normalize((1e-16, 0))
    assert exc.value.code == "ZERO_VECTOR"


def test_state_vector_validation():
    """States are unit vectors of dimension at least 2"""
    with pytest.raises(PreconditionFailed):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(InvalidDimension):
        StateVector(np.array([1.0]))
    with pytest.raises(DimensionMismatch):
        StateVector(np.eye(2))
    with pytest.raises(InvalidDimension):
        normalize(np.ones(5), tol=Tolerances(max_dim=4))


def test_state_vector_is_read_only():
    psi = normalize((1, 0))
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0.0


@pytest.mark.parametrize(
    "u, v, expected",
    [
        ((1, 0), (1, 0), 1.0),
        ((1, 0), (0, 1), 0.0),
        ((1, 1j), (1, 0), 1 / math.sqrt(2)),
    ],
)
def test_inner(u, v, expected):
    assert inner(normalize(u), normalize(v)) == pytest.approx(expected, abs=1e-15)


def test_inner_is_conjugate_symmetric():
    u = random_state(4, 1)
    v = random_state(4, 2)
    assert inner(u, v) == pytest.approx(inner(v, u).conjugate(), abs=1e-15)


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        inner(normalize((1, 0)), normalize((1, 0, 0)))


def test_operator_hermitian_flag():
    assert Operator(SIGMA_X).is_hermitian
    skew = Operator(np.array([[0, 1], [-1, 0]], dtype=complex))
    assert not skew.is_hermitian
    with pytest.raises(NotHermitian):
        skew.require_hermitian()
    with pytest.raises(DimensionMismatch):
        Operator(np.ones((2, 3)))


def test_operator_algebra():
    A, B = Operator(SIGMA_X), Operator(SIGMA_Z)
    np.testing.assert_allclose((A + B).entries, SIGMA_X + SIGMA_Z)
    np.testing.assert_allclose((A - B).entries, SIGMA_X - SIGMA_Z)
    np.testing.assert_allclose((A @ B).entries, SIGMA_X @ SIGMA_Z)
    np.testing.assert_allclose(A.scaled(2j).entries, 2j * SIGMA_X)
    np.testing.assert_allclose(Operator.identity(3).entries, np.eye(3))
    np.testing.assert_allclose(Operator.diagonal([2, 3]).entries, np.diag([2, 3]))
    with pytest.raises(DimensionMismatch):
        A + Operator.zeros(3)


def test_context_rejects_non_orthonormal_basis():
    with pytest.raises(NotOrthonormal):
        Context(np.array([[1, 1], [0, 1]], dtype=complex))


def test_context_indexing_and_overlaps():
    context = computational_context(3)
    psi = normalize((1, 2j, 0))
    assert len(context) == 3
    assert [s.amplitudes.tolist() for s in context] == np.eye(3).tolist()
    np.testing.assert_allclose(context.overlaps(psi), psi.amplitudes)
    rebuilt = Context.from_states(context.states, label="copy")
    np.testing.assert_allclose(rebuilt.basis, context.basis)


def test_haar_context_is_deterministic():
    first = haar_random_context(2, 12345)
    second = haar_random_context(2, 12345)
    other = haar_random_context(2, 12346)
    np.testing.assert_array_equal(first.basis, second.basis)
    assert not np.allclose(first.basis, other.basis)
    assert first.label == "haar-12345"


def test_haar_context_orthonormality_residuals():
    context = haar_random_context(4, 99)
    residuals = np.abs(gram_matrix(context) - np.eye(4))
    assert residuals.shape == (4, 4)
    assert np.all(residuals < 1e-10)


def test_haar_marginal_is_uniform():
    """|<w_1|e_0>|^2 is uniform on [0, 1] for Haar bases in two dimensions"""
    samples = [abs(haar_random_context(2, s).basis[0, 1]) ** 2 for s in range(10_000)]
    assert np.mean(samples) == pytest.approx(0.5, abs=0.02)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**63 - 1), dim=st.integers(min_value=2, max_value=7))
def test_haar_context_is_unitary(seed, dim):
    context = haar_random_context(dim, seed)
    np.testing.assert_allclose(gram_matrix(context), np.eye(dim), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), dim=st.integers(min_value=2, max_value=6))
def test_orthonormal_completion_starts_with_psi(seed, dim):
    psi = random_state(dim, seed)
    completion = orthonormal_completion(psi)
    np.testing.assert_allclose(completion.basis[:, 0], psi.amplitudes, atol=1e-12)
    assert abs(inner(completion[0], psi) - 1.0) < 1e-12


def test_random_hermitian_and_projector():
    rng = np.random.default_rng(3)
    H = random_hermitian(5, rng)
    assert H.is_hermitian
    psi = random_state(5, 4)
    P = projector(psi)
    assert P.is_hermitian
    np.testing.assert_allclose((P @ P).entries, P.entries, atol=1e-14)


def test_in_basis_diagonalizes_in_eigenbasis():
    w, v = np.linalg.eigh(SIGMA_X)
    context = Context(v)
    np.testing.assert_allclose(in_basis(Operator(SIGMA_X), context), np.diag(w), atol=1e-14)


def test_hermitian_evolution_at_zero_is_identity():
    H = random_hermitian(3, np.random.default_rng(0))
    np.testing.assert_allclose(hermitian_evolution(H, 0.0).entries, np.eye(3), atol=1e-14)


def test_hermitian_evolution_closed_form():
    U = hermitian_evolution(Operator(SIGMA_Z), math.pi / 2, direction=-1)
    expected = np.diag([np.exp(-1j * math.pi / 2), np.exp(1j * math.pi / 2)])
    np.testing.assert_allclose(U.entries, expected, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_hermitian_evolution_matches_expm(seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(4, rng)
    t = float(rng.uniform(-3, 3))
    U = hermitian_evolution(H, t)
    np.testing.assert_allclose(U.entries, expm(-1j * H.entries * t), atol=1e-10)
    assert np.linalg.norm(U.entries.conj().T @ U.entries - np.eye(4)) < 1e-10
    forward = hermitian_evolution(H, t, direction=1)
    np.testing.assert_allclose(forward.entries @ U.entries, np.eye(4), atol=1e-10)


def test_hermitian_evolution_preconditions():
    with pytest.raises(NotHermitian):
        hermitian_evolution(Operator(np.array([[0, 1], [0, 0]], dtype=complex)), 1.0)
    with pytest.raises(PreconditionFailed):
        hermitian_evolution(Operator(SIGMA_Z), 1.0, direction=2)
