import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from contextual_born.contextual import WEAK, CvParams
from contextual_born.errors import InvalidMeasureSpec
from contextual_born.hilbert import (
    Context,
    Operator,
    computational_context,
    haar_random_context,
    normalize,
    orthonormal_completion,
    projector,
    random_hermitian,
    random_state,
)
from contextual_born.measure import (
    BORN,
    QUARTIC,
    MeasureSpec,
    evaluate_measure,
    expectation,
    parametrized_spec,
    statistics,
    variance,
)
from contextual_born.schemas import MeasureKind

SIGMA_X = Operator(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA_Z = Operator.diagonal([1.0, -1.0])
PLUS_MINUS = Context(np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2))


def _rotation(alpha):
    c, s = math.cos(alpha), math.sin(alpha)
    return Context(np.array([[c, -s], [s, c]], dtype=complex))


def test_measure_spec_validation():
    """Only parametrized measures take mu, p0 and a reference basis"""
    with pytest.raises(ValidationError):
        MeasureSpec(kind=MeasureKind.PARAMETRIZED)
    with pytest.raises(ValidationError):
        MeasureSpec(kind=MeasureKind.BORN, mu=(1.0, 0.0))
    with pytest.raises(ValidationError):
        MeasureSpec(kind=MeasureKind.QUARTIC, p0=0.1)
    psi = random_state(3, 0)
    with pytest.raises(ValidationError):
        MeasureSpec(kind=MeasureKind.PARAMETRIZED, mu=(1.0, 0.0), reference_basis=orthonormal_completion(psi))


def test_born_eigenbasis_case():
    measure = evaluate_measure(BORN, normalize((1, 0)), computational_context(2))
    assert measure.retained == (0,)
    assert measure.weights == pytest.approx((1.0,))
    assert measure.validity.total == pytest.approx(1.0)
    assert measure.validity.is_probability
    np.testing.assert_allclose(measure.extended(), [1.0, 0.0])


def test_born_uniform_case():
    measure = evaluate_measure(BORN, normalize((1, 1)), computational_context(2))
    np.testing.assert_allclose(measure.as_array(), [0.5, 0.5], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), dim=st.integers(min_value=2, max_value=8))
def test_born_is_a_probability_measure(seed, dim):
    measure = evaluate_measure(BORN, random_state(dim, seed), haar_random_context(dim, seed + 1))
    assert measure.validity.all_real
    assert measure.validity.all_nonneg
    assert abs(measure.validity.total - 1.0) < 1e-10


def test_quartic_is_not_normalized():
    measure = evaluate_measure(QUARTIC, random_state(3, 2), haar_random_context(3, 2))
    assert measure.validity.is_probability
    assert measure.validity.total.real < 1.0


@pytest.mark.parametrize("seed", range(5))
def test_parametrized_delta_reduces_to_born(seed):
    psi = random_state(4, seed)
    context = haar_random_context(4, seed + 50)
    spec = parametrized_spec(psi, (1.0, 0.0, 0.0, 0.0))
    np.testing.assert_allclose(
        evaluate_measure(spec, psi, context).as_array(),
        evaluate_measure(BORN, psi, context).as_array(),
        atol=1e-13,
    )


def test_parametrized_weights_can_be_complex():
    psi = random_state(3, 7)
    spec = parametrized_spec(psi, (1.0, 0.3, -0.2))
    measure = evaluate_measure(spec, psi, haar_random_context(3, 7))
    assert not measure.validity.all_real
    assert not measure.validity.is_probability
    # sum_w <psi_i|w><w|psi> = delta_i0 keeps the total at mu_0
    assert measure.validity.total == pytest.approx(1.0, abs=1e-12)


def test_parametrized_offset_shifts_total():
    psi = random_state(3, 7)
    measure = evaluate_measure(parametrized_spec(psi, (1.0, 0.0, 0.0), p0=0.25), psi, haar_random_context(3, 1))
    assert measure.validity.total == pytest.approx(1.75, abs=1e-12)


def test_parametrized_reference_must_start_at_psi():
    psi, other = random_state(3, 1), random_state(3, 2)
    spec = parametrized_spec(other, (1.0, 0.0, 0.0))
    with pytest.raises(InvalidMeasureSpec) as exc:
        evaluate_measure(spec, psi, haar_random_context(3, 0))
    assert exc.value.code == "INVALID_MEASURE_SPEC"


def test_expectation_plus_minus_context():
    ex = expectation(SIGMA_X, normalize((1, 0)), PLUS_MINUS, BORN, WEAK)
    assert ex == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_born_expectation_is_quantum_expectation(seed):
    rng = np.random.default_rng(seed)
    A = random_hermitian(5, rng)
    psi = random_state(5, rng)
    reference = np.vdot(psi.amplitudes, A.entries @ psi.amplitudes)
    for k in range(3):
        context = haar_random_context(5, 1000 * seed + k)
        assert abs(expectation(A, psi, context, BORN, WEAK) - reference) < 1e-10


def test_expectation_of_identity_is_total_weight():
    psi = random_state(3, 3)
    context = haar_random_context(3, 3)
    assert expectation(Operator.identity(3), psi, context, BORN) == pytest.approx(1.0, abs=1e-12)
    total = evaluate_measure(QUARTIC, psi, context).validity.total
    assert expectation(Operator.identity(3), psi, context, QUARTIC) == pytest.approx(total, abs=1e-12)


def test_variance_of_constants_and_eigenstates():
    psi = random_state(3, 9)
    context = haar_random_context(3, 9)
    assert variance(Operator.identity(3), psi, context, BORN) == pytest.approx(0.0, abs=1e-12)
    e0 = normalize((1, 0))
    assert variance(projector(e0), e0, computational_context(2), BORN) == pytest.approx(0.0, abs=1e-15)


def test_born_variance_is_context_invariant():
    psi = normalize((1, 1))
    variances = [variance(SIGMA_Z, psi, haar_random_context(2, s), BORN) for s in range(100)]
    assert max(variances) - min(variances) < 1e-10
    assert variances[0] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.3, 0.5, math.pi / 8])
def test_quartic_expectation_closed_form(alpha):
    """Ex_quartic(sigma_z) in a basis rotated by alpha is sin(4 alpha) / 4"""
    ex = expectation(SIGMA_Z, normalize((1, 1)), _rotation(alpha), QUARTIC)
    assert ex == pytest.approx(math.sin(4 * alpha) / 4, abs=1e-12)


def test_statistics_flags_imaginary_variance():
    psi = random_state(3, 12)
    spec = parametrized_spec(psi, (1.0, 0.5, 0.5))
    stats = statistics(random_hermitian(3, np.random.default_rng(12)), psi, haar_random_context(3, 12), spec)
    assert not stats.validity.all_real
    assert stats.variance_imag > 0.0


def test_statistics_with_symmetric_coefficients():
    psi = random_state(3, 13)
    context = haar_random_context(3, 13)
    A = random_hermitian(3, np.random.default_rng(13))
    stats = statistics(A, psi, context, BORN, CvParams(b=1))
    # b = a makes every value real, so the Born expectation is real as well
    assert abs(stats.expectation.imag) < 1e-12


def test_statistics_share_the_coefficient_sample_space():
    """With b = -1 the real overlap of |0> cancels; only |1> carries weight and value"""
    psi = normalize((1, 1j))
    p = CvParams(b=-1)
    stats = statistics(SIGMA_Z, psi, computational_context(2), BORN, p)
    assert stats.validity.total == pytest.approx(0.5)
    assert stats.expectation == pytest.approx(-0.5)
    assert stats.variance == pytest.approx(0.125)

    explicit = statistics(SIGMA_Z, psi, computational_context(2), BORN, p, retained=(1,))
    assert explicit == stats
