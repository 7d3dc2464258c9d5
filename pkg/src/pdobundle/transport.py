"""Horizontal transport of paths of truncated operators.

For a path ``gamma`` in the group and a connection form ``theta`` the
horizontal projection is ``H gamma = gamma g`` where ``g`` solves the right
logarithmic equation::

    g' g^{-1} = -theta_{gamma(t)}(gamma'(t)),    g(t0) = Id.

Horizontality is measured in the pullback bundle ``gamma^* P``, trivialized
by ``gamma`` itself: at the point ``gamma g`` the form reads
``g^{-1} (theta_gamma(gamma') g + g')``.  Outputs of
:func:`horizontal_project` carry that trivialization (their ``frame``) so a
second projection is evaluated in the same chart.  The residual reported
per node uses a finite-difference derivative of the computed ``g`` on the
integration grid, so it reflects the actual integration error; the step is
halved until it drops below the tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline, make_interp_spline

from .connections import value_at
from .operators import (BundleElement, TruncOperator, _as_matrix, decay_profile,
                        make_bundle_element, quantize)
from .symbols import FormalSymbol, NotEllipticError

__all__ = [
    "PathSample",
    "Frame",
    "RadialMap",
    "TransportError",
    "horizontal_project",
    "integrate_gauge",
    "horizontality_residuals",
    "equivariance_check",
    "horizontal_lift",
    "holonomy_element",
    "holonomy_of_segments",
    "local_trivialize",
    "exp_segment_path",
]

FD_STEP = 1e-5


class TransportError(RuntimeError):
    def __init__(self, message, residual=np.inf):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class Frame:
    """Trivialization of a horizontal output: ``value(t) = base(t) @ gauge(t)``."""

    base: "PathSample"
    gauge: Callable
    gauge_dot: Callable


@dataclass(frozen=True, eq=False)
class PathSample:
    """A path of operators sampled on a strictly increasing node grid.

    ``position`` / ``velocity`` give the path between nodes; when absent
    they come from a cubic spline through the node values.
    """

    nodes: np.ndarray
    values: np.ndarray
    K: int
    r: int = 1
    position: Callable | None = None
    velocity: Callable | None = None
    derivative_mode: str = "analytic"
    frame: Frame | None = None
    symbols: tuple | None = None
    residuals: np.ndarray | None = None
    substeps: int | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be a strictly increasing grid with at least 2 points")
        vals = np.asarray(self.values, dtype=complex)
        n = (2 * self.K + 1) * self.r
        if vals.shape != (len(nodes), n, n):
            raise ValueError(f"values must have shape ({len(nodes)}, {n}, {n})")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", vals)
        if self.position is None:
            spline = CubicSpline(nodes, vals, axis=0)
            object.__setattr__(self, "position", spline)
            object.__setattr__(self, "velocity", spline.derivative())
            object.__setattr__(self, "derivative_mode", "finite_difference")
        elif self.velocity is None:
            object.__setattr__(self, "velocity", _central_difference(self.position, nodes))
            object.__setattr__(self, "derivative_mode", "finite_difference")

    @classmethod
    def from_function(cls, f, nodes, K, r=1, velocity=None, **kw):
        nodes = np.asarray(nodes, dtype=float)
        vals = np.stack([_as_matrix(f(t)) for t in nodes])
        pos = lambda t: _as_matrix(f(t))  # noqa: E731
        vel = None if velocity is None else (lambda t: _as_matrix(velocity(t)))
        return cls(nodes, vals, K, r, pos, vel, "analytic" if velocity else "finite_difference",
                   **kw)

    @classmethod
    def from_values(cls, nodes, values, K, r=1):
        return cls(np.asarray(nodes, dtype=float), np.stack([_as_matrix(v) for v in values]), K, r)

    def __len__(self):
        return len(self.nodes)

    def operator(self, i):
        return TruncOperator(self.values[i], self.K, self.r, "composite")

    def node_velocities(self):
        return np.stack([self.velocity(t) for t in self.nodes])

    def right_act(self, h):
        """The path ``t -> gamma(t) h`` (no frame)."""
        hm = _as_matrix(h)
        return PathSample(self.nodes, self.values @ hm, self.K, self.r,
                          lambda t: self.position(t) @ hm, lambda t: self.velocity(t) @ hm,
                          self.derivative_mode)


def _central_difference(f, nodes, step=FD_STEP):
    t0, t1 = nodes[0], nodes[-1]
    span = t1 - t0
    d = step * max(1.0, span)

    def vel(t):
        if t - d < t0:
            return (-3 * f(t) + 4 * f(t + d) - f(t + 2 * d)) / (2 * d)
        if t + d > t1:
            return (3 * f(t) - 4 * f(t - d) + f(t - 2 * d)) / (2 * d)
        return (f(t + d) - f(t - d)) / (2 * d)

    return vel


def exp_segment_path(start, X, length, n_nodes=2):
    """``t -> start exp(t X)`` on ``[0, length]`` with its analytic velocity."""
    start, X = _as_matrix(start), _as_matrix(X)
    n = X.shape[0]
    K = (n - 1) // 2

    def pos(t):
        return start @ scipy.linalg.expm(t * X)

    def vel(t):
        return pos(t) @ X

    return PathSample.from_function(pos, np.linspace(0.0, length, n_nodes), K, 1, vel)


def _potential(theta, path):
    """``t -> A(t)``, the connection pulled back along ``path`` (frame-aware)."""
    if path.frame is None:
        def A(t):
            return _as_matrix(value_at(theta, path.position(t), path.velocity(t)))
        return A
    base_A = _potential(theta, path.frame.base)

    def A_framed(t):
        g = path.frame.gauge(t)
        return np.linalg.solve(g, base_A(t) @ g + path.frame.gauge_dot(t))
    return A_framed


def _rk4(A, t0, t1, n, g0):
    ts = np.linspace(t0, t1, n + 1)
    gs = np.empty((n + 1,) + g0.shape, dtype=complex)
    gs[0] = g = g0
    h = (t1 - t0) / n
    for i in range(n):
        t = ts[i]
        Am = A(t + h / 2)
        k1 = -A(t) @ g
        k2 = -Am @ (g + h / 2 * k1)
        k3 = -Am @ (g + h / 2 * k2)
        k4 = -A(t + h) @ (g + h * k3)
        g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        gs[i + 1] = g
    return ts, gs


def integrate_gauge(theta, path, substeps):
    """Fixed-step RK4 for ``g' = -A g`` with ``substeps`` steps per node interval.

    Returns the fine time grid and the gauge values on it.
    """
    A = _potential(theta, path)
    n = path.values.shape[1]
    g = np.eye(n, dtype=complex)
    t_all, g_all = [path.nodes[:1]], [g[None]]
    for t0, t1 in zip(path.nodes[:-1], path.nodes[1:]):
        ts, gs = _rk4(A, t0, t1, substeps, g)
        g = gs[-1]
        t_all.append(ts[1:])
        g_all.append(gs[1:])
    return np.concatenate(t_all), np.concatenate(g_all)


_C5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_F5 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def _node_derivatives(ts, gs, substeps, n_nodes):
    last = len(ts) - 1
    out = []
    for i in range(n_nodes):
        j = i * substeps
        central = 2 <= j <= last - 2 and np.isclose(ts[j] - ts[j - 1], ts[j + 1] - ts[j])
        if central:
            h = ts[j + 1] - ts[j]
            out.append(np.tensordot(_C5, gs[j - 2: j + 3], axes=1) / h)
        elif j + 4 <= last:
            h = ts[j + 1] - ts[j]
            out.append(np.tensordot(_F5, gs[j: j + 5], axes=1) / h)
        else:
            h = ts[j] - ts[j - 1]
            out.append(-np.tensordot(_F5, gs[j - 4: j + 1][::-1], axes=1) / h)
    return np.stack(out)


def _residuals(theta, path, ts, gs, substeps):
    A = _potential(theta, path)
    idx = np.arange(len(path.nodes)) * substeps
    gdot = _node_derivatives(ts, gs, substeps, len(path.nodes))
    res = np.empty(len(path.nodes))
    for i, j in enumerate(idx):
        t, g = ts[j], gs[j]
        defect = np.linalg.solve(g, A(t) @ g + gdot[i])
        hvel = path.velocity(t) @ g + path.position(t) @ gdot[i]
        res[i] = np.linalg.norm(defect) / (1.0 + np.linalg.norm(hvel))
    return res


def horizontality_residuals(theta, path, substeps=64):
    """Per-node horizontality residual of ``path`` (zero gauge correction).

    For a framed path this is ``|A_frame(t)| / (1 + |gamma'|)``; for a plain
    path it is ``|theta_gamma(gamma')| / (1 + |gamma'|)``.
    """
    A = _potential(theta, path)
    return np.array([np.linalg.norm(A(t)) / (1.0 + np.linalg.norm(path.velocity(t)))
                     for t in path.nodes])


def _gauge_interpolant(ts, gs):
    k = 5 if len(ts) > 5 else len(ts) - 1
    spl = make_interp_spline(ts, gs, k=k, axis=0)
    return spl, spl.derivative()


def horizontal_project(theta, gamma, tol=1e-8, substeps=4, max_substeps=4096):
    """Horizontal projection ``H gamma = gamma g``.

    Parameters
    ----------
    theta : ConnectionForm
    gamma : PathSample
        Path of invertible operators.
    tol : float
        Bound on the per-node horizontality residual.
    substeps, max_substeps : int
        Initial and largest number of RK4 steps per node interval.

    Returns
    -------
    PathSample
        The projected path, framed by ``gamma`` and carrying its residuals.

    Raises
    ------
    TransportError
        If the tolerance is not met at ``max_substeps``.
    """
    for i in (0, len(gamma) - 1):
        if not np.all(np.isfinite(np.linalg.cond(gamma.values[i]))) or \
                np.linalg.cond(gamma.values[i]) > 1e12:
            raise TransportError(f"path value at node {i} is singular")
    n = max(4, substeps)
    while True:
        ts, gs = integrate_gauge(theta, gamma, n)
        res = _residuals(theta, gamma, ts, gs, n)
        if res.max() <= tol:
            break
        if 2 * n > max_substeps:
            raise TransportError(f"horizontality residual {res.max():.3e} above {tol:.1e} "
                                 f"at {n} substeps", float(res.max()))
        n *= 2
    idx = np.arange(len(gamma)) * n
    if gamma.frame is not None:
        base = gamma.frame.base
        G = np.stack([gamma.frame.gauge(t) for t in ts]) @ gs
    else:
        base, G = gamma, gs
    spl, dspl = _gauge_interpolant(ts, G)
    frame = Frame(base, spl, dspl)

    def pos(t):
        return base.position(t) @ spl(t)

    def vel(t):
        return base.velocity(t) @ spl(t) + base.position(t) @ dspl(t)

    values = np.stack([base.position(t) for t in gamma.nodes]) @ G[idx]
    return PathSample(gamma.nodes, values, gamma.K, gamma.r, pos, vel, "analytic", frame,
                      gamma.symbols, res, n)


def equivariance_check(theta, gamma, h, tol=1e-8):
    """Largest relative node difference between ``H(gamma h)`` and ``H(gamma) h``."""
    hm = _as_matrix(h)
    A = horizontal_project(theta, gamma.right_act(hm), tol).values
    B = horizontal_project(theta, gamma, tol).values @ hm
    return float(max(np.linalg.norm(a - b) / np.linalg.norm(b) for a, b in zip(A, B)))


def holonomy_element(path):
    """``path(t_end) path(t_0)^{-1}``."""
    return path.values[-1] @ np.linalg.inv(path.values[0])


def holonomy_of_segments(theta, segments, tol=1e-12, substeps=4):
    """Gauge holonomy along concatenated ``start exp(t X)`` segments.

    Returns ``g`` at the end of the loop (each segment restarts from the
    accumulated gauge, so the result is the ordered product).
    """
    n = _as_matrix(segments[0][1]).shape[0]
    total = np.eye(n, dtype=complex)
    for start, X, length in segments:
        path = exp_segment_path(start, X, length)
        ts, gs = integrate_gauge(theta, path, substeps)
        ts2, gs2 = integrate_gauge(theta, path, 2 * substeps)
        while np.linalg.norm(gs2[-1] - gs[-1]) > tol and substeps < 1024:
            substeps *= 2
            gs = gs2
            ts2, gs2 = integrate_gauge(theta, path, 2 * substeps)
        total = gs2[-1] @ total
    return total


def horizontal_lift(theta, base, nodes, start, tol=1e-8, base_velocity=None):
    """Horizontal lift of a path of formal symbols starting at ``start``.

    Parameters
    ----------
    base : callable
        ``t -> FormalSymbol``.
    nodes : array_like
        Node grid; ``base(nodes[0])`` must equal ``start.base``.
    start : BundleElement
    base_velocity : callable, optional
        ``t -> FormalSymbol``, the derivative of ``base``; central
        differences are used when omitted.
    """
    nodes = np.asarray(nodes, dtype=float)
    K = start.total.K
    b0 = base(nodes[0])
    if b0.max_abs_diff(start.base) > 1e-13 or b0.order != start.base.order:
        raise ValueError("start element does not lie over base(t0)")
    symbols = tuple(base(t) for t in nodes)
    for t, s in zip(nodes, symbols):
        bad = s.principal_singularity()
        if bad is not None:
            raise NotEllipticError(f"base path not elliptic at t = {t:.6g} "
                                   f"({bad[0]} part, x = {bad[1]:.6g})", bad[1], bad[0])
    R0 = start.total.matrix - quantize(start.base, K).matrix
    # the integrator revisits the same times when it halves the step
    cache = {}

    def pos(t):
        t = float(t)
        if t not in cache:
            cache[t] = quantize(base(t), K).matrix + R0
        return cache[t]

    vel = None
    if base_velocity is not None:
        def vel(t):
            return quantize(base_velocity(t), K).matrix

    gamma = PathSample.from_function(pos, nodes, K, start.total.r, velocity=vel, symbols=symbols)
    return horizontal_project(theta, gamma, tol)


@dataclass(frozen=True, eq=False)
class RadialMap:
    """Radial paths from ``center``; straight lines unless ``rule`` is given.

    ``rule(center, x, t)`` must return a FormalSymbol.
    """

    center: FormalSymbol
    rule: Callable | None = None
    checks: int = 17

    def path(self, x):
        def straight(t):
            if t == 0:
                return self.center
            if t == 1:
                return x
            return self.center.scale(1.0 - t) + x.scale(t)

        if self.rule is None:
            return straight
        return lambda t: self.center if t == 0 else (x if t == 1 else self.rule(self.center, x, t))

    def accepts(self, x):
        p = self.path(x)
        return all(p(t).principal_singularity() is None
                   for t in np.linspace(0.0, 1.0, self.checks))

    def __call__(self, x):
        if not self.accepts(x):
            raise NotEllipticError("radial path leaves the elliptic set")
        return self.path(x)


def local_trivialize(theta, rad, x, g, K, nodes=None, tol=1e-8, basepoint=None):
    """``Phi(x, g) = L(Rad(x))(1) g`` as a BundleElement over ``x``."""
    nodes = np.linspace(0.0, 1.0, 5) if nodes is None else nodes
    start = basepoint if basepoint is not None else make_bundle_element(rad.center, None, K)
    lift = horizontal_lift(theta, rad(x), nodes, start, tol)
    total = TruncOperator(lift.values[-1] @ _as_matrix(g), K, start.total.r, "composite")
    defect = decay_profile(total - quantize(x, K), start.defect.p)
    return BundleElement(x, total, defect)
