"""Smoothing-valued connection forms on the truncated operator group.

Five families are provided.  At the identity, with ``S = s a s^*``::

    SmoothLeft     v -> S v
    SmoothRight    v -> v S
    SmoothBracket  v -> [S, v]
    EpsComm        v -> [v, eps]
    HalfPlus       v -> (1 + eps)/2 v

and the value at a point ``g`` is obtained from the value at the identity
by an extension rule.  The default, ``"ad_twisted"``::

    theta_g(v) = g^{-1} theta_0(v g^{-1}) g

satisfies ``theta_{gh}(v h) = h^{-1} theta_g(v) h`` identically.  The
plain right-invariant rule ``theta_0(v g^{-1})`` is kept as a negative
control, and the left-invariant rule ``theta_0(g^{-1} v)`` is the one under
which the Maurer-Cartan curvature of ``HalfPlus`` takes the closed form of
:func:`curvature_closed_form`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from itertools import permutations

import numpy as np

from .operators import (TruncOperator, _as_matrix, decay_profile, epsilon,
                        hardy_projection, inverse)

__all__ = [
    "Family",
    "ConnectionForm",
    "EXTENSIONS",
    "value_at_identity",
    "value_at",
    "check_covariance",
    "curvature_closed_form",
    "curvature_holonomy",
    "square_loop",
    "wedge_square",
    "wedge_square_bruteforce",
]

EXTENSIONS = ("ad_twisted", "right_invariant", "left_invariant")


class Family(str, enum.Enum):
    SMOOTH_LEFT = "SmoothLeft"
    SMOOTH_RIGHT = "SmoothRight"
    SMOOTH_BRACKET = "SmoothBracket"
    EPS_COMM = "EpsComm"
    HALF_PLUS = "HalfPlus"

    @property
    def needs_parameters(self):
        return self in (Family.SMOOTH_LEFT, Family.SMOOTH_RIGHT, Family.SMOOTH_BRACKET)


@dataclass(frozen=True, eq=False)
class ConnectionForm:
    """A connection family with its parameters and extension rule.

    ``reading`` selects how the two-argument formulas are read for the
    ``Smooth*`` families: ``"parameters"`` treats ``(s, a)`` as fixed and the
    tangent as the right-hand argument; ``"tangent"`` treats the tangent as
    the middle argument, ``s v s^*``, with the base point absorbed by the
    extension rule.
    """

    family: Family
    K: int
    r: int = 1
    s: TruncOperator | None = None
    a: TruncOperator | None = None
    extension: str = "ad_twisted"
    reading: str = "parameters"

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.extension not in EXTENSIONS:
            raise ValueError(f"unknown extension rule {self.extension!r}")
        if self.reading not in ("parameters", "tangent"):
            raise ValueError(f"unknown reading {self.reading!r}")
        if self.family.needs_parameters:
            if self.s is None or self.a is None:
                raise ValueError(f"{self.family.value} needs parameters s and a")
            for op in (self.s, self.a):
                if (op.K, op.r) != (self.K, self.r):
                    raise ValueError("parameter dimensions do not match the form")

    @classmethod
    def smooth(cls, family, s, a, **kw):
        return cls(Family(family), s.K, s.r, s, a, **kw)

    @classmethod
    def eps_comm(cls, K, r=1, **kw):
        return cls(Family.EPS_COMM, K, r, **kw)

    @classmethod
    def half_plus(cls, K, r=1, **kw):
        return cls(Family.HALF_PLUS, K, r, **kw)

    def with_extension(self, extension):
        return replace(self, extension=extension)

    @property
    def S(self):
        s = _as_matrix(self.s)
        return s @ _as_matrix(self.a) @ s.conj().T

    def descriptor(self):
        """Serializable description (parameters referenced by content hash)."""
        out = {"family": self.family.value, "K": self.K, "r": self.r,
               "extension": self.extension, "reading": self.reading}
        if self.family.needs_parameters:
            out["s"] = self.s.hash()
            out["a"] = self.a.hash()
        return out

    def smoothing_parameters_ok(self, threshold=1e4, p=2):
        if not self.family.needs_parameters:
            return True
        return decay_profile(self.s, p).s_p <= threshold


def _theta0(theta, v):
    v = _as_matrix(v)
    fam = theta.family
    if fam is Family.EPS_COMM:
        e = np.diag(epsilon(theta.K, theta.r).matrix)
        return v * e[None, :] - e[:, None] * v
    if fam is Family.HALF_PLUS:
        p = np.diag(hardy_projection(theta.K, theta.r).matrix).real
        return p[:, None] * v
    s = _as_matrix(theta.s)
    if theta.reading == "tangent":
        S_v = s @ v @ s.conj().T
        if fam is Family.SMOOTH_BRACKET:
            return np.zeros_like(S_v)  # [s v s^*, Id]
        return S_v
    S = theta.S
    if fam is Family.SMOOTH_LEFT:
        return S @ v
    if fam is Family.SMOOTH_RIGHT:
        return v @ S
    return S @ v - v @ S


def _check_dims(theta, *ops):
    n = (2 * theta.K + 1) * theta.r
    for op in ops:
        if isinstance(op, TruncOperator) and (op.K, op.r) != (theta.K, theta.r):
            raise ValueError("dimension mismatch between form and argument")
        if _as_matrix(op).shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {_as_matrix(op).shape}")


def value_at_identity(theta, v):
    """Value of the form on the tangent ``v`` at the identity."""
    _check_dims(theta, v)
    return TruncOperator(_theta0(theta, v), theta.K, theta.r, "composite")


def value_at(theta, g, v):
    """Value at the point ``g``, extended from the identity per ``theta.extension``."""
    _check_dims(theta, g, v)
    gm, vm = _as_matrix(g), _as_matrix(v)
    # plain inverse: this sits inside the transport integrator, where a
    # condition estimate per call would dominate the cost
    ginv = np.linalg.inv(gm)
    if theta.extension == "ad_twisted":
        out = ginv @ _theta0(theta, vm @ ginv) @ gm
    elif theta.extension == "right_invariant":
        out = _theta0(theta, vm @ ginv)
    else:
        out = _theta0(theta, ginv @ vm)
    return TruncOperator(out, theta.K, theta.r, "composite")


def _rel(diff, ref):
    nd = np.linalg.norm(diff)
    if nd == 0:
        return 0.0
    return float(nd / max(np.linalg.norm(ref), np.finfo(float).tiny))


def check_covariance(theta, h, samples):
    """Largest relative violation of ``theta_{gh}(v h) = h^{-1} theta_g(v) h``.

    ``samples`` is an iterable of ``(g, v)`` pairs.
    """
    hm = _as_matrix(h)
    hinv = _as_matrix(inverse(hm))
    worst = 0.0
    for g, v in samples:
        gm, vm = _as_matrix(g), _as_matrix(v)
        lhs = _as_matrix(value_at(theta, gm @ hm, vm @ hm))
        rhs = hinv @ _as_matrix(value_at(theta, gm, vm)) @ hm
        worst = max(worst, _rel(lhs - rhs, rhs))
    return worst


def curvature_closed_form(a, b, K=None, r=1):
    """Curvature of ``HalfPlus`` on the pair ``(a, b)``.

    ``(p b p') a - (p a p') b`` with ``p = (1 + eps)/2`` and ``p' = 1 - p``;
    equal to ``[p a, p b] - p [a, b]``.  The value is finite rank for
    banded ``a, b``, hence smoothing, although ``HalfPlus`` itself is not.
    """
    am, bm = _as_matrix(a), _as_matrix(b)
    if isinstance(a, TruncOperator):
        K, r = a.K, a.r
    elif K is None:
        K = (am.shape[0] - 1) // 2
    p = np.diag(hardy_projection(K, r).matrix).real
    q = 1.0 - p
    pbq = p[:, None] * bm * q[None, :]
    paq = p[:, None] * am * q[None, :]
    return TruncOperator(pbq @ am - paq @ bm, K, r, "composite")


def square_loop(a, b, h):
    """Closed loop ``t -> c(t)`` starting at the identity.

    Right translations along ``a``, ``b``, ``-a``, ``-b`` (each for time
    ``h``) followed by the one-parameter segment ``c exp(-u log c)`` that
    closes the commutator gap ``c``.  Returns a list of
    ``(start, velocity_generator, length)`` segments: on each one the path is
    ``start exp(t X)`` for ``t`` in ``[0, length]``.
    """
    import scipy.linalg

    am, bm = _as_matrix(a), _as_matrix(b)
    n = am.shape[0]
    segs = []
    g = np.eye(n, dtype=complex)
    for X in (am, bm, -am, -bm):
        segs.append((g, X, h))
        g = g @ scipy.linalg.expm(h * X)
    gap = scipy.linalg.logm(g)
    segs.append((g, -gap, 1.0))
    return segs


def curvature_holonomy(theta, a, b, h=1e-2, tol=1e-12, richardson=True):
    """Curvature from the holonomy of a small square loop.

    Transports around :func:`square_loop` with :mod:`pdobundle.transport`,
    using the left-invariant extension of ``theta``.  For the standard
    transport equation ``g' = -A g`` the holonomy of the loop ``a`` then
    ``b`` is ``Id - h^2 Omega(a, b) + O(h^3)``, so ``(Id - hol)/h^2`` is
    returned.  Each estimate averages the loop with its point reflection
    (``-a``, ``-b``) so that odd powers of ``h`` cancel, and the two step
    sizes are Richardson-extrapolated as ``(4 Omega(h/2) - Omega(h))/3``.
    """
    from .transport import holonomy_of_segments

    theta = theta.with_extension("left_invariant")

    am, bm = _as_matrix(a), _as_matrix(b)

    def omega(step):
        # the reflected square (-a, -b) has the same curvature but opposite
        # odd-order terms; averaging leaves an even expansion in h
        out = 0
        for x, y in ((am, bm), (-am, -bm)):
            hol = holonomy_of_segments(theta, square_loop(x, y, step), tol=tol)
            out = out + (np.eye(hol.shape[0]) - hol) / step ** 2
        return out / 2

    K, r = theta.K, theta.r
    w1 = omega(h)
    if not richardson:
        return TruncOperator(w1, K, r, "composite")
    w2 = omega(h / 2)
    return TruncOperator((4 * w2 - w1) / 3, K, r, "composite")


def wedge_square(omega, a, b, c, d):
    """Antisymmetrized square ``(1/4) sum_sigma sgn(sigma) Omega(s1, s2) Omega(s3, s4)``.

    ``omega`` is a bilinear map returning matrices.  Uses the six pair
    splittings; each stands for four permutations.
    """
    O = lambda x, y: _as_matrix(omega(x, y))  # noqa: E731
    out = (O(a, b) @ O(c, d) - O(a, c) @ O(b, d) + O(a, d) @ O(b, c)
           + O(b, c) @ O(a, d) - O(b, d) @ O(a, c) + O(c, d) @ O(a, b))
    if isinstance(a, TruncOperator):
        return TruncOperator(out, a.K, a.r, "composite")
    return out


def _perm_sign(p):
    p = list(p)
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def wedge_square_bruteforce(omega, a, b, c, d):
    """Direct summation over all 24 permutations (reference implementation)."""
    args = (a, b, c, d)
    out = 0
    for p in permutations(range(4)):
        x = [args[i] for i in p]
        out = out + _perm_sign(p) * (_as_matrix(omega(x[0], x[1])) @ _as_matrix(omega(x[2], x[3])))
    return out / 4
