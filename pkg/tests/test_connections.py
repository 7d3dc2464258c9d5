import numpy as np
import pytest

from pdobundle.connections import (ConnectionForm, Family, check_covariance,
                                   curvature_closed_form, curvature_holonomy, value_at,
                                   value_at_identity, wedge_square, wedge_square_bruteforce)
from pdobundle.operators import (epsilon, hardy_projection, identity, quantize,
                                 random_group_element, random_smoothing)
from pdobundle.symbols import FormalSymbol, random_symbol

K = 6


def E(n, K=K):
    return quantize(FormalSymbol.exp_mode(n), K)


@pytest.fixture
def forms():
    rng = np.random.default_rng(0)
    s, a = random_smoothing(rng, K), random_smoothing(rng, K)
    return {f: ConnectionForm.smooth(f, s, a) for f in
            (Family.SMOOTH_LEFT, Family.SMOOTH_RIGHT, Family.SMOOTH_BRACKET)} | {
        Family.EPS_COMM: ConnectionForm.eps_comm(K), Family.HALF_PLUS: ConnectionForm.half_plus(K)}


def test_values_at_identity_match_dense_formulas(forms):
    rng = np.random.default_rng(1)
    v = rng.standard_normal((2 * K + 1,) * 2) + 1j * rng.standard_normal((2 * K + 1,) * 2)
    e, p = epsilon(K).matrix, hardy_projection(K).matrix
    S = forms[Family.SMOOTH_LEFT].S
    expected = {Family.SMOOTH_LEFT: S @ v, Family.SMOOTH_RIGHT: v @ S,
                Family.SMOOTH_BRACKET: S @ v - v @ S, Family.EPS_COMM: v @ e - e @ v,
                Family.HALF_PLUS: p @ v}
    for fam, th in forms.items():
        np.testing.assert_allclose(value_at_identity(th, v).matrix, expected[fam], atol=1e-12)


def test_ad_twisted_extension_formula(forms):
    rng = np.random.default_rng(2)
    g = random_group_element(rng, K).matrix
    v = quantize(random_symbol(rng, 0, 3, 2), K).matrix
    gi = np.linalg.inv(g)
    th = forms[Family.EPS_COMM]
    e = epsilon(K).matrix
    w = v @ gi
    np.testing.assert_allclose(value_at(th, g, v).matrix, gi @ (w @ e - e @ w) @ g, atol=1e-10)


def test_covariance_holds_and_corruption_is_detected(forms):
    rng = np.random.default_rng(3)
    h = random_group_element(rng, K)
    samples = [(random_group_element(rng, K), quantize(random_symbol(rng, 0, 3, 2), K))
               for _ in range(3)]
    for th in forms.values():
        assert check_covariance(th, h, samples) < 1e-11
        assert check_covariance(th.with_extension("right_invariant"), h, samples) > 1e-3


def test_form_validation():
    with pytest.raises(ValueError):
        ConnectionForm(Family.SMOOTH_LEFT, K)
    with pytest.raises(ValueError):
        ConnectionForm.eps_comm(K, extension="sideways")
    with pytest.raises(ValueError):
        value_at_identity(ConnectionForm.eps_comm(K), np.eye(3))
    d = ConnectionForm.half_plus(K).descriptor()
    assert d == {"family": "HalfPlus", "K": K, "r": 1, "extension": "ad_twisted",
                 "reading": "parameters"}


def test_curvature_closed_form_identities():
    rng = np.random.default_rng(4)
    a, b = (quantize(random_symbol(rng, 0, 3, 2), K) for _ in range(2))
    p = hardy_projection(K).matrix
    A, B = a.matrix, b.matrix
    # independent form: [pa, pb] - p[a, b]
    alt = (p @ A) @ (p @ B) - (p @ B) @ (p @ A) - p @ (A @ B - B @ A)
    np.testing.assert_allclose(curvature_closed_form(a, b).matrix, alt, atol=1e-12)
    np.testing.assert_allclose(curvature_closed_form(b, a).matrix,
                               -curvature_closed_form(a, b).matrix, atol=1e-13)


def test_curvature_of_shifts():
    # only the mode k = 0 crosses the sign boundary under e^{-ix} then e^{ix}
    C = curvature_closed_form(E(1), E(-1)).matrix
    expected = np.zeros_like(C)
    expected[K, K] = -1
    np.testing.assert_array_equal(C, expected)
    # e^{ix}, e^{2ix}: e_{-3} crosses in both orders and cancels; e_{-2} -> e_1 remains
    C = curvature_closed_form(E(1), E(2)).matrix
    expected = np.zeros_like(C)
    expected[K + 1, K - 2] = 1
    np.testing.assert_array_equal(C, expected)
    # with the unit: [p, p b] - p [1, b] = p b (1 - p)
    p = hardy_projection(K).matrix
    np.testing.assert_array_equal(curvature_closed_form(identity(K), E(-3)).matrix,
                                  p @ E(-3).matrix @ (np.eye(2 * K + 1) - p))


@pytest.mark.parametrize("pair", [(1, -1), (2, -3), (1, 2)])
def test_curvature_matches_holonomy(pair):
    Kh = 4
    a, b = E(pair[0], Kh), E(pair[1], Kh)
    W = curvature_holonomy(ConnectionForm.half_plus(Kh), a, b, h=1e-2)
    np.testing.assert_allclose(W.matrix, curvature_closed_form(a, b).matrix, atol=1e-6)


def test_wedge_square_matches_bruteforce():
    rng = np.random.default_rng(5)
    ops = [quantize(random_symbol(rng, 0, 2, 2), 3) for _ in range(4)]
    fast = wedge_square(curvature_closed_form, *ops).matrix
    slow = wedge_square_bruteforce(curvature_closed_form, *ops)
    np.testing.assert_allclose(fast, slow, atol=1e-12)
    # alternating in its arguments
    swapped = wedge_square(curvature_closed_form, ops[1], ops[0], ops[2], ops[3]).matrix
    np.testing.assert_allclose(swapped, -fast, atol=1e-12)
