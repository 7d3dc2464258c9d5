import numpy as np
import pytest
import scipy.linalg

from pdobundle.connections import ConnectionForm, Family
from pdobundle.operators import make_bundle_element, quantize, random_group_element, random_smoothing
from pdobundle.symbols import FormalSymbol, FourierFunction, NotEllipticError, random_symbol
from pdobundle.transport import (PathSample, RadialMap, TransportError, equivariance_check,
                                 exp_segment_path, holonomy_element, horizontal_lift,
                                 horizontal_project, integrate_gauge, local_trivialize)

K = 4
n = 2 * K + 1
nodes = np.linspace(0.0, 1.0, 5)


@pytest.fixture
def setup():
    rng = np.random.default_rng(0)
    s, a = random_smoothing(rng, K), random_smoothing(rng, K)
    X = 0.5 * quantize(random_symbol(rng, 0, 3, 2, modes=1), K).matrix
    X /= np.linalg.norm(X, 2)
    return ConnectionForm.smooth(Family.SMOOTH_LEFT, s, a), X


def exp_path(X):
    return PathSample.from_function(lambda t: scipy.linalg.expm(t * X), nodes, K,
                                    velocity=lambda t: X @ scipy.linalg.expm(t * X))


def test_smooth_left_closed_form(setup):
    # theta_g(v) = g^-1 S v for SmoothLeft; along exp(tX) the horizontal
    # projection is exp(t (1 - S) X)
    th, X = setup
    H = horizontal_project(th, exp_path(X), tol=1e-10)
    S = th.S
    for t, val in zip(nodes, H.values):
        np.testing.assert_allclose(val, scipy.linalg.expm(t * (np.eye(n) - S) @ X), atol=1e-9)
    assert H.residuals.max() <= 1e-10


def test_already_horizontal_path_is_fixed():
    # a diagonal generator commutes with eps, so EpsComm vanishes along it
    X = np.diag(np.linspace(-0.5, 0.5, n)).astype(complex)
    H = horizontal_project(ConnectionForm.eps_comm(K), exp_path(X))
    np.testing.assert_allclose(H.values, exp_path(X).values, atol=1e-13)


def test_idempotence_and_equivariance(setup):
    th, X = setup
    gamma = exp_path(X)
    H = horizontal_project(th, gamma)
    HH = horizontal_project(th, H)
    np.testing.assert_allclose(HH.values, H.values, atol=1e-8)
    h = random_group_element(np.random.default_rng(1), K)
    assert equivariance_check(th, gamma, h) < 1e-7
    assert equivariance_check(th.with_extension("right_invariant"), gamma, h) > 1e-3


def test_rk4_is_fourth_order(setup):
    th, X = setup
    gamma = exp_path(4 * X)
    ref = integrate_gauge(th, gamma, 64)[1][-1]
    e1 = np.linalg.norm(integrate_gauge(th, gamma, 2)[1][-1] - ref)
    e2 = np.linalg.norm(integrate_gauge(th, gamma, 4)[1][-1] - ref)
    assert e1 / e2 > 12


def test_transport_error_when_budget_exhausted(setup):
    th, X = setup
    with pytest.raises(TransportError) as info:
        horizontal_project(th, exp_path(4 * X), tol=1e-15, max_substeps=8)
    assert info.value.residual > 1e-15


def test_path_validation():
    with pytest.raises(ValueError):
        PathSample(np.array([0.0, 0.0]), np.zeros((2, n, n)), K)
    with pytest.raises(ValueError):
        PathSample(nodes, np.zeros((5, 3, 3)), K)
    p = exp_segment_path(np.eye(n), np.zeros((n, n)), 1.0)
    np.testing.assert_array_equal(holonomy_element(p), np.eye(n))


def test_lift_checks_start_and_ellipticity():
    one = FormalSymbol.identity(3)
    start = make_bundle_element(one, None, K)
    th = ConnectionForm.eps_comm(K)
    with pytest.raises(ValueError):
        horizontal_lift(th, lambda t: one.scale(2.0), nodes, start)
    # 1 - t (1 + e^{ix}) is not elliptic at t = 1/2, x = 0
    bump = FormalSymbol.multiplication(FourierFunction.from_modes({0: 1.0, 1: 1.0}, 1), 3)
    with pytest.raises(NotEllipticError):
        horizontal_lift(th, lambda t: one - bump.scale(t), nodes, start)


def test_lift_of_constant_base_is_constant():
    one = FormalSymbol.identity(3)
    start = make_bundle_element(one, None, K)
    lift = horizontal_lift(ConnectionForm.eps_comm(K), lambda t: one, nodes, start)
    np.testing.assert_allclose(lift.values, np.broadcast_to(np.eye(n), lift.values.shape),
                               atol=1e-14)


def test_radial_map_and_trivialization():
    one = FormalSymbol.identity(3)
    rad = RadialMap(one)
    assert rad.accepts(one.scale(2.0))
    assert not rad.accepts(one.scale(-1.0))  # passes through zero
    with pytest.raises(NotEllipticError):
        rad(one.scale(-1.0))
    th = ConnectionForm.eps_comm(K)
    el = local_trivialize(th, rad, one, np.eye(n), K)
    np.testing.assert_allclose(el.total.matrix, np.eye(n), atol=1e-13)
