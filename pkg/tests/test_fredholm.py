import numpy as np
import pytest

from pdobundle.fredholm import (AmbiguousThresholdError, LiftError, kernel_cokernel,
                                lift_invertible, lift_invertible_of_matrix, numerical_rank,
                                reduce_order_matrix)
from pdobundle.operators import identity, mode_projector, quantize
from pdobundle.symbols import FormalSymbol, FourierFunction, NotEllipticError
from pdobundle.verify import fredholm_test_symbols, planted_kernel_symbol


def test_identity_minus_mode_projector():
    K = 4
    A = identity(K) - mode_projector(K)
    lam, mu = 0.7, 1.9
    res = lift_invertible_of_matrix(A, lam, mu)
    P0 = mode_projector(K).matrix
    np.testing.assert_allclose(res.A_prime.matrix, np.eye(9) + (lam + mu - 1) * P0, atol=1e-14)
    assert (res.rank_K, res.rank_I, res.correction_rank, res.defect_rank) == (1, 1, 1, 1)
    assert res.certified and res.attempts == 1


def test_invertible_input_is_untouched():
    rng = np.random.default_rng(0)
    M = np.eye(9) + 0.1 * rng.standard_normal((9, 9))
    res = lift_invertible_of_matrix(M)
    np.testing.assert_array_equal(res.A_prime.matrix, M)
    assert res.correction_rank == res.defect_rank == 0
    assert res.defect.s_p == 0 and res.certified


def test_retry_after_singular_first_choice():
    A = identity(4) - mode_projector(4)
    # lam + mu = 0 leaves the corrected mode at zero
    res = lift_invertible_of_matrix(A, 0.5, -0.5, seed=3)
    assert res.attempts == 2 and res.certified
    with pytest.raises(LiftError):
        lift_invertible_of_matrix(A, 0.5, -0.5, retries=0)


def test_planted_kernel_symbol():
    K, k0 = 8, 3
    a = planted_kernel_symbol(k0)
    Q = quantize(a, K).matrix
    k = np.arange(-K, K + 1)
    # oracle: 1 - k0/|k| off zero, and 1 at k = 0 (order -1 terms vanish there)
    expected = np.where(k == 0, 1.0, 1.0 - k0 / np.maximum(np.abs(k), 1))
    np.testing.assert_allclose(np.diag(Q).real, expected, atol=1e-15)
    res = lift_invertible(a, K)
    assert res.rank_K == res.rank_I == 2
    assert res.correction_rank == res.defect_rank == 2
    assert res.certified


def test_order_reduction_matrix():
    K = 3
    A = quantize(FormalSymbol.xi(2), K)
    k = np.arange(-K, K + 1)
    out = reduce_order_matrix(A, 1)
    np.testing.assert_allclose(np.diag(out.matrix).real, k / np.sqrt(1 + k ** 2), atol=1e-15)
    assert reduce_order_matrix(A, 0) is A


def test_all_test_symbols_certify():
    rng = np.random.default_rng(1)
    for a in fredholm_test_symbols(rng, n=9):
        res = lift_invertible(a, 12)
        assert res.certified, res.record()
        assert res.identity_residual < 1e-10


def test_threshold_ambiguity_and_degenerate_input():
    with pytest.raises(AmbiguousThresholdError):
        kernel_cokernel(np.diag([1.0, 1e-8, 1.0]))
    kc = kernel_cokernel(np.zeros((5, 5)), tau=1e-3)
    assert kc.rank_K == kc.rank_I == 5
    assert lift_invertible_of_matrix(np.zeros((5, 5)), tau=1e-3).degenerate
    with pytest.raises(ValueError):
        kernel_cokernel(np.eye(3), tau=0.0)


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.diag([1.0, 1e-12, 0.5])) == 2


def test_non_elliptic_rejected():
    f = FourierFunction.from_modes({0: 1.0, 1: -1.0}, 1)
    with pytest.raises(NotEllipticError):
        lift_invertible(FormalSymbol.multiplication(f, 3), 8)


def test_record_is_serializable():
    import json
    rec = lift_invertible_of_matrix(identity(4) - mode_projector(4)).record()
    assert json.loads(json.dumps(rec))["pass"] is True
