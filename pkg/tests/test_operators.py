import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdobundle.operators import (SingularOperatorError, SmoothingThresholdError, TruncOperator,
                                 adjoint, commutator, content_hash, decay_profile, epsilon,
                                 exp_path, hardy_projection, identity, inverse, is_smoothing,
                                 make_bundle_element, mode_projector, multiply, quantize,
                                 random_group_element, random_smoothing)
from pdobundle.symbols import FormalSymbol, FourierFunction, compose, random_symbol
from pdobundle.symbols import adjoint as symbol_adjoint


def test_quantize_unit_is_identity():
    np.testing.assert_array_equal(quantize(FormalSymbol.identity(3), 8).matrix, np.eye(17))


def test_quantize_xi_is_diagonal():
    K = 6
    Q = quantize(FormalSymbol.xi(2), K).matrix
    # oracle: D e^{ikx} = k e^{ikx}, applied to each basis vector
    for i, k in enumerate(range(-K, K + 1)):
        e = np.zeros(2 * K + 1)
        e[i] = 1
        np.testing.assert_array_equal(Q @ e, k * e)


def test_quantize_exp_is_shift():
    K = 5
    Q = quantize(FormalSymbol.exp_mode(1), K).matrix
    np.testing.assert_array_equal(Q, np.eye(2 * K + 1, k=-1))


def test_quantize_k0_convention():
    # only degree-0 plus parts are seen at k = 0
    f = FourierFunction.constant(3.0)
    a = FormalSymbol(-1, (f, f), (f, f))
    assert quantize(a, 4).matrix[4, 4] == 0
    b = FormalSymbol(0, (f, f), (f.scale(-1), f))
    assert quantize(b, 4).matrix[4, 4] == 3


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_quantize_is_linear(seed):
    rng = np.random.default_rng(seed)
    a, b = random_symbol(rng, -1, 3, 3), random_symbol(rng, -1, 3, 3)
    # equal up to the rounding of the per-entry sums
    np.testing.assert_allclose(quantize(a + b, 8).matrix,
                               quantize(a, 8).matrix + quantize(b, 8).matrix, rtol=0, atol=1e-14)


def test_quantize_warns_when_K_below_Kx():
    with pytest.warns(UserWarning):
        quantize(FormalSymbol.exp_mode(5), 3)


def test_epsilon_involution_and_commutators():
    K = 4
    e = epsilon(K)
    np.testing.assert_array_equal((e @ e).matrix, np.eye(2 * K + 1))
    np.testing.assert_array_equal(e.H.matrix, e.matrix)
    c = commutator(e, quantize(FormalSymbol.exp_mode(1), K)).matrix
    expected = np.zeros_like(c)
    expected[K + 0, K - 1] = 2
    np.testing.assert_array_equal(c, expected)
    assert not commutator(e, quantize(FormalSymbol.xi(1), K)).matrix.any()
    p = hardy_projection(K)
    np.testing.assert_array_equal((p @ p).matrix, p.matrix)


def test_decay_profile_examples():
    K = 4
    assert decay_profile(np.zeros((9, 9)), 3).s_p == 0
    assert decay_profile(identity(K), 2).s_p == (1 + 2 * K) ** 2
    c = commutator(epsilon(K), quantize(FormalSymbol.exp_mode(1), K))
    for p in (0, 1, 2, 5):
        prof = decay_profile(c, p)
        assert prof.s_p == 2 * 2 ** p
        assert prof.s(p + 1) == 2 * 2 ** (p + 1)
    assert decay_profile(c).exponent == np.inf


def test_decay_exponent_of_power_law():
    K = 32
    m = np.abs(np.arange(-K, K + 1))
    A = (1.0 + m[:, None] + m[None, :]) ** -5.0
    assert decay_profile(A, 0).exponent == pytest.approx(5.0, abs=1e-9)
    assert not is_smoothing(A, 6.0)
    assert is_smoothing(random_smoothing(np.random.default_rng(0), K))


def test_block_profile_uses_operator_norm():
    K, r = 3, 2
    M = np.zeros(((2 * K + 1) * r,) * 2)
    M[K * r:(K + 1) * r, K * r:(K + 1) * r] = [[3, 0], [4, 0]]
    assert decay_profile(TruncOperator(M, K, r), 0).s_p == pytest.approx(5.0)


def test_group_operations():
    rng = np.random.default_rng(1)
    A = random_group_element(rng, 8)
    np.testing.assert_allclose(multiply(A, inverse(A)).matrix, np.eye(17), atol=1e-10)
    np.testing.assert_array_equal(adjoint(A).matrix, A.matrix.conj().T)
    np.testing.assert_array_equal(exp_path(np.zeros((3, 3)), 0.7), np.eye(3))
    v = TruncOperator(np.diag([1j * np.pi, 0, 0]), 1)
    np.testing.assert_allclose(exp_path(v, 1).matrix, np.diag([-1, 1, 1]), atol=1e-15)


def test_inverse_reports_condition():
    with pytest.raises(SingularOperatorError) as info:
        inverse(identity(3) - mode_projector(3))
    assert info.value.condition > 1e12


def test_bundle_elements():
    one = FormalSymbol.identity(2)
    K = 6
    el = make_bundle_element(one, None, K)
    np.testing.assert_array_equal(el.total.matrix, np.eye(13))
    assert el.defect.s_p == 0
    with pytest.raises(SingularOperatorError):
        make_bundle_element(one, -mode_projector(K), K)
    half = make_bundle_element(one, mode_projector(K) * 0.5, K)
    assert half.defect.s_p == 0.5
    with pytest.raises(SmoothingThresholdError):
        make_bundle_element(one, identity(K) * 0.5, K, threshold=10.0)


def test_composition_defect_is_smoothing_like():
    rng = np.random.default_rng(4)
    K, N = 32, 4
    a, b = random_symbol(rng, 0, N, 4), random_symbol(rng, -1, N, 4)
    D = quantize(compose(a, b), K) - quantize(a, K) @ quantize(b, K)
    assert decay_profile(D, window=K // 2).exponent >= N - 1


def test_symbol_adjoint_matches_matrix_adjoint():
    rng = np.random.default_rng(5)
    K, N = 32, 4
    a = random_symbol(rng, 0, N, 4)
    D = quantize(symbol_adjoint(a), K) - quantize(a, K).H
    assert decay_profile(D, window=K // 2).exponent >= N - 1


def test_content_hash_is_stable():
    A = quantize(FormalSymbol.exp_mode(1), 3)
    B = TruncOperator(A.matrix.copy(), 3, 1, "composite")
    assert content_hash(A) == content_hash(B) == A.hash()
    assert content_hash(A) != content_hash(quantize(FormalSymbol.exp_mode(-1), 3))
