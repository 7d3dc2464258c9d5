"""Formal classical symbols on the circle.

A classical symbol of order ``o`` is an asymptotic sum of positively
homogeneous components of degrees ``o, o-1, ...``.  On S^1 the cotangent
fibre minus the zero section has two half-lines, so every component is
stored as a pair::

    plus_part(x)  * xi**(o - j)      for xi > 0
    minus_part(x) * |xi|**(o - j)    for xi < 0

with ``plus_part`` / ``minus_part`` trigonometric polynomials with
``r x r`` matrix coefficients (:class:`FourierFunction`).  A
:class:`FormalSymbol` keeps the first ``depth`` components; all calculus
(composition, adjoint, parametrix, order reduction) is exact up to the
retained depth and up to x-mode truncation, which is measured and carried
in a loss value rather than hidden.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import binom

__all__ = [
    "FourierFunction",
    "FormalSymbol",
    "NotEllipticError",
    "compose",
    "adjoint",
    "parametrix",
    "order_reduce",
    "order_reduction_symbol",
    "random_symbol",
]

COND_LIMIT = 1e12


class NotEllipticError(ValueError):
    """Principal part is singular somewhere on the ellipticity grid."""

    def __init__(self, message, x=None, side=None):
        super().__init__(message)
        self.x = x
        self.side = side


def _falling(d, alpha):
    out = 1
    for i in range(alpha):
        out *= d - i
    return out


def _grid(M):
    return 2 * np.pi * np.arange(M) / M


@dataclass(frozen=True, eq=False)
class FourierFunction:
    """Matrix-valued trigonometric polynomial on the circle.

    ``coeffs[n + K]`` is the ``r x r`` coefficient of ``exp(i n x)`` for
    ``|n| <= K``.  ``loss`` is the largest coefficient magnitude dropped by
    a mode truncation somewhere in the history of this value (0 when the
    value is exact).
    """

    coeffs: np.ndarray
    loss: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficients must have shape (2K+1, r, r), got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def rank(self):
        return self.coeffs.shape[1]

    @property
    def lossy(self):
        return self.loss > 0.0

    @classmethod
    def zeros(cls, K=0, rank=1):
        return cls(np.zeros((2 * K + 1, rank, rank), dtype=complex))

    @classmethod
    def constant(cls, value, K=0, rank=1):
        c = np.zeros((2 * K + 1, rank, rank), dtype=complex)
        c[K] = np.asarray(value) * np.eye(rank) if np.ndim(value) == 0 else value
        return cls(c)

    @classmethod
    def identity(cls, K=0, rank=1):
        return cls.constant(1.0, K, rank)

    @classmethod
    def from_modes(cls, modes, K=None, rank=1):
        """Build from a ``{mode: coefficient}`` mapping."""
        if K is None:
            K = max((abs(n) for n in modes), default=0)
        c = np.zeros((2 * K + 1, rank, rank), dtype=complex)
        for n, v in modes.items():
            if abs(n) > K:
                raise ValueError(f"mode {n} exceeds mode bound {K}")
            c[n + K] = np.asarray(v) * np.eye(rank) if np.ndim(v) == 0 else v
        return cls(c)

    @classmethod
    def from_samples(cls, values, K):
        """Project equispaced samples ``values[j] = f(2 pi j / M)`` onto modes ``|n| <= K``."""
        values = np.asarray(values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        M = values.shape[0]
        n = np.arange(-K, K + 1)
        E = np.exp(-1j * np.outer(n, _grid(M))) / M
        c = np.einsum("nj,jab->nab", E, values)
        # aliasing-free estimate of what falls outside |n| <= K
        coef = np.fft.fft(values, axis=0) / M
        freqs = np.fft.fftfreq(M, d=1.0 / M).astype(int)
        outside = np.abs(freqs) > K
        loss = float(np.abs(coef[outside]).max()) if outside.any() else 0.0
        return cls(c, loss)

    def mode(self, n):
        if abs(n) > self.K:
            return np.zeros((self.rank, self.rank), dtype=complex)
        return self.coeffs[n + self.K]

    def pad(self, K):
        if K == self.K:
            return self
        if K < self.K:
            raise ValueError("pad cannot shrink the mode bound; use truncate")
        c = np.zeros((2 * K + 1, self.rank, self.rank), dtype=complex)
        c[K - self.K: K + self.K + 1] = self.coeffs
        return FourierFunction(c, self.loss)

    def truncate(self, K):
        if K >= self.K:
            return self.pad(K)
        dropped = np.concatenate([self.coeffs[: self.K - K], self.coeffs[self.K + K + 1:]])
        loss = max(self.loss, float(np.abs(dropped).max(initial=0.0)))
        return FourierFunction(self.coeffs[self.K - K: self.K + K + 1].copy(), loss)

    def _aligned(self, other):
        if self.rank != other.rank:
            raise ValueError(f"rank mismatch: {self.rank} != {other.rank}")
        K = max(self.K, other.K)
        return self.pad(K), other.pad(K)

    def __add__(self, other):
        a, b = self._aligned(other)
        return FourierFunction(a.coeffs + b.coeffs, max(a.loss, b.loss))

    def __sub__(self, other):
        a, b = self._aligned(other)
        return FourierFunction(a.coeffs - b.coeffs, max(a.loss, b.loss))

    def __neg__(self):
        return FourierFunction(-self.coeffs, self.loss)

    def scale(self, c):
        return FourierFunction(c * self.coeffs, self.loss)

    def __mul__(self, other):
        if not isinstance(other, FourierFunction):
            return self.scale(other)
        a, b = self._aligned(other)
        K = a.K
        full = np.zeros((4 * K + 1, a.rank, a.rank), dtype=complex)
        for p in range(2 * K + 1):
            ap = a.coeffs[p]
            if not ap.any():
                continue
            full[p: p + 2 * K + 1] += np.matmul(ap, b.coeffs)
        out = FourierFunction(full, max(a.loss, b.loss))
        return out.truncate(K)

    __rmul__ = scale

    def derivative(self, order=1):
        """``d^order/dx^order``: mode ``n`` is multiplied by ``(i n)**order``."""
        if order == 0:
            return self
        n = np.arange(-self.K, self.K + 1)
        return FourierFunction(((1j * n) ** order)[:, None, None] * self.coeffs, self.loss)

    def conj_transpose(self):
        """Pointwise conjugate transpose: mode ``n`` becomes ``conj(c_{-n}).T``."""
        return FourierFunction(np.conj(self.coeffs[::-1]).transpose(0, 2, 1), self.loss)

    def samples(self, M):
        """Values at the ``M`` equispaced points ``2 pi j / M``."""
        n = np.arange(-self.K, self.K + 1)
        E = np.exp(1j * np.outer(_grid(M), n))
        return np.einsum("jn,nab->jab", E, self.coeffs)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = np.arange(-self.K, self.K + 1)
        return np.einsum("jn,nab->jab", np.exp(1j * np.outer(x, n)), self.coeffs)

    def inverse(self, M=None):
        """Pointwise matrix inverse, projected back onto ``|n| <= K``.

        The inverse of a trigonometric polynomial is not one; the discarded
        tail is recorded in ``loss``.
        """
        c = self.coeffs
        if not np.delete(c, self.K, axis=0).any():
            # constant: invert exactly
            out = np.zeros_like(c)
            out[self.K] = np.linalg.inv(c[self.K])
            return FourierFunction(out, self.loss)
        M = M or max(8 * self.K + 1, 65)
        vals = self.samples(M)
        return FourierFunction.from_samples(np.linalg.inv(vals), self.K)

    def allclose(self, other, rtol=1e-12, atol=1e-12):
        a, b = self._aligned(other)
        return np.allclose(a.coeffs, b.coeffs, rtol=rtol, atol=atol)


def _zero_like(f):
    return FourierFunction.zeros(f.K, f.rank)


@dataclass(frozen=True, eq=False)
class FormalSymbol:
    """Truncated formal classical symbol with half-line split components.

    Parameters
    ----------
    order : int
        Degree of the leading component.
    plus, minus : sequence of FourierFunction
        ``plus[j]`` / ``minus[j]`` multiply ``|xi|**(order - j)`` on the
        positive / negative half-line.
    """

    order: int
    plus: tuple
    minus: tuple
    _elliptic: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        plus, minus = tuple(self.plus), tuple(self.minus)
        if len(plus) == 0 or len(plus) != len(minus):
            raise ValueError("need depth >= 1 and matching plus/minus components")
        ranks = {f.rank for f in plus + minus}
        if len(ranks) != 1:
            raise ValueError("all components must share the rank")
        K = max(f.K for f in plus + minus)
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "plus", tuple(f.pad(K) for f in plus))
        object.__setattr__(self, "minus", tuple(f.pad(K) for f in minus))

    # -- basic attributes ---------------------------------------------------
    @property
    def depth(self):
        return len(self.plus)

    @property
    def rank(self):
        return self.plus[0].rank

    @property
    def K_x(self):
        return self.plus[0].K

    @property
    def components(self):
        return list(zip(self.plus, self.minus))

    @property
    def loss(self):
        return max(f.loss for f in self.plus + self.minus)

    def degree(self, j):
        return self.order - j

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_parts(cls, order, plus, minus=None):
        """Components from ``FourierFunction`` lists; ``minus`` defaults to ``plus``."""
        plus = list(plus)
        minus = plus if minus is None else list(minus)
        return cls(order, tuple(plus), tuple(minus))

    @classmethod
    def identity(cls, depth=1, K_x=0, rank=1):
        one = FourierFunction.identity(K_x, rank)
        zero = FourierFunction.zeros(K_x, rank)
        comps = [one] + [zero] * (depth - 1)
        return cls(0, tuple(comps), tuple(comps))

    @classmethod
    def scalar(cls, c, depth=1, K_x=0, rank=1):
        return cls.identity(depth, K_x, rank).scale(c)

    @classmethod
    def xi(cls, depth=1, K_x=0, rank=1):
        """Symbol of ``D = -i d/dx``: ``xi`` on both half-lines."""
        one = FourierFunction.identity(K_x, rank)
        zero = FourierFunction.zeros(K_x, rank)
        return cls(1, (one,) + (zero,) * (depth - 1), (-one,) + (zero,) * (depth - 1))

    @classmethod
    def multiplication(cls, f, depth=1):
        """Order-0 symbol of multiplication by ``f`` (a FourierFunction)."""
        zero = _zero_like(f)
        comps = (f,) + (zero,) * (depth - 1)
        return cls(0, comps, comps)

    @classmethod
    def exp_mode(cls, n, depth=1, K_x=None, rank=1):
        """Multiplication by ``exp(i n x)``."""
        K_x = abs(n) if K_x is None else K_x
        return cls.multiplication(FourierFunction.from_modes({n: 1.0}, K_x, rank), depth)

    @classmethod
    def sign(cls, depth=1, K_x=0, rank=1):
        """Order-0 sign-type symbol: ``+1`` for ``xi > 0``, ``-1`` for ``xi < 0``."""
        one = FourierFunction.identity(K_x, rank)
        zero = FourierFunction.zeros(K_x, rank)
        return cls(0, (one,) + (zero,) * (depth - 1), (-one,) + (zero,) * (depth - 1))

    # -- arithmetic ---------------------------------------------------------
    def scale(self, c):
        return FormalSymbol(self.order, tuple(f.scale(c) for f in self.plus),
                            tuple(f.scale(c) for f in self.minus))

    def shift_order(self, order):
        """Re-express with a higher nominal order by prepending zero components."""
        if order < self.order:
            raise ValueError("cannot lower the nominal order")
        pad = order - self.order
        zero = _zero_like(self.plus[0])
        return FormalSymbol(order, (zero,) * pad + self.plus, (zero,) * pad + self.minus)

    def truncate(self, depth):
        if depth > self.depth:
            raise ValueError(f"depth {depth} exceeds available {self.depth}")
        return FormalSymbol(self.order, self.plus[:depth], self.minus[:depth])

    def __add__(self, other):
        if not isinstance(other, FormalSymbol):
            return NotImplemented
        if self.rank != other.rank:
            raise ValueError("rank mismatch")
        o = max(self.order, other.order)
        a, b = self.shift_order(o), other.shift_order(o)
        d = min(a.depth, b.depth)
        return FormalSymbol(o, tuple(x + y for x, y in zip(a.plus[:d], b.plus[:d])),
                            tuple(x + y for x, y in zip(a.minus[:d], b.minus[:d])))

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def allclose(self, other, rtol=1e-12, atol=1e-12):
        if self.order != other.order or self.depth != other.depth:
            return False
        return all(x.allclose(y, rtol, atol) for x, y in
                   zip(self.plus + self.minus, other.plus + other.minus))

    def max_abs_diff(self, other):
        """Largest coefficient difference over the common depth (orders aligned)."""
        o = max(self.order, other.order)
        a, b = self.shift_order(o), other.shift_order(o)
        d = min(a.depth, b.depth)
        out = 0.0
        for x, y in zip(a.plus[:d] + a.minus[:d], b.plus[:d] + b.minus[:d]):
            x, y = x._aligned(y)
            out = max(out, float(np.abs(x.coeffs - y.coeffs).max()))
        return out

    # -- ellipticity --------------------------------------------------------
    def principal_singularity(self):
        """First grid point where a principal part is singular, or ``None``.

        Uses ``4 K_x + 1`` equispaced points; returns ``(side, x)``.
        """
        M = 4 * self.K_x + 1
        x = _grid(M)
        for side, f in (("plus", self.plus[0]), ("minus", self.minus[0])):
            vals = f.samples(M)
            s = np.linalg.svd(vals, compute_uv=False)
            smax = s[:, 0].max()
            if smax == 0:
                return side, float(x[0])
            bad = (s[:, -1] <= smax / COND_LIMIT) | ~np.isfinite(s[:, -1])
            if bad.any():
                return side, float(x[np.argmax(bad)])
        return None

    @property
    def elliptic_at_order_0(self):
        if not self._elliptic:
            self._elliptic.append(self.principal_singularity() is None)
        return self._elliptic[0]

    def require_elliptic(self):
        bad = self.principal_singularity()
        if bad is not None:
            side, x = bad
            raise NotEllipticError(f"principal {side} part is singular at x = {x:.6g}", x, side)

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, k):
        """``sigma(., k)`` as a FourierFunction, using the ``k = 0`` convention.

        At ``k = 0`` only degree-0 plus components contribute.
        """
        out = _zero_like(self.plus[0])
        for j, (p, m) in enumerate(self.components):
            d = self.order - j
            if k > 0:
                out = out + p.scale(float(k) ** d)
            elif k < 0:
                out = out + m.scale(float(-k) ** d)
            elif d == 0:
                out = out + p
        return out


def _xi_derivative_coeff(d, alpha, side_sign):
    # d^alpha/dxi^alpha of |xi|^d on a half-line with xi = side_sign * |xi|
    return _falling(d, alpha) * side_sign ** alpha


def compose(a, b, depth=None):
    """Star product of two formal symbols, truncated to ``depth`` components.

    Uses ``sum_alpha (-i)^alpha / alpha! * d_xi^alpha a * d_x^alpha b``
    separately on each half-line.
    """
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} != {b.rank}")
    avail = min(a.depth, b.depth)
    depth = avail if depth is None else depth
    if depth < 1 or depth > avail:
        raise ValueError(f"depth {depth} not representable (available: {avail})")
    K = max(a.K_x, b.K_x)
    sides = []
    for side_sign, pa, pb in ((1, a.plus, b.plus), (-1, a.minus, b.minus)):
        pa = [f.pad(K) for f in pa]
        pb = [f.pad(K) for f in pb]
        out = [FourierFunction.zeros(K, a.rank) for _ in range(depth)]
        for j in range(depth):
            for alpha in range(depth - j):
                c = _xi_derivative_coeff(a.order - j, alpha, side_sign)
                if c == 0:
                    continue
                coef = (-1j) ** alpha / factorial(alpha) * c if alpha else 1.0
                left = pa[j] if alpha == 0 else pa[j].scale(coef)
                for l in range(depth - j - alpha):
                    out[j + l + alpha] = out[j + l + alpha] + left * pb[l].derivative(alpha)
        sides.append(tuple(out))
    return FormalSymbol(a.order + b.order, sides[0], sides[1])


def adjoint(a, depth=None):
    """Formal adjoint ``sum_alpha (-i)^alpha / alpha! d_xi^alpha d_x^alpha a^*``."""
    depth = a.depth if depth is None else depth
    if depth < 1 or depth > a.depth:
        raise ValueError(f"depth {depth} not representable (available: {a.depth})")
    sides = []
    for side_sign, parts in ((1, a.plus), (-1, a.minus)):
        star = [f.conj_transpose() for f in parts]
        out = [_zero_like(star[0]) for _ in range(depth)]
        for j in range(depth):
            for alpha in range(depth - j):
                c = _xi_derivative_coeff(a.order - j, alpha, side_sign)
                if c == 0:
                    continue
                coef = (-1j) ** alpha / factorial(alpha) * c if alpha else 1.0
                term = star[j].derivative(alpha)
                out[j + alpha] = out[j + alpha] + (term if alpha == 0 else term.scale(coef))
        sides.append(tuple(out))
    return FormalSymbol(a.order, sides[0], sides[1])


def parametrix(a, depth=None):
    """Right formal inverse of an elliptic symbol.

    Solves ``compose(a, b) = 1`` degree by degree: ``b_0`` is the pointwise
    inverse of the principal part and each ``b_n`` cancels the degree
    ``-n`` part of the product built from ``b_0 .. b_{n-1}``.

    Raises
    ------
    NotEllipticError
        If a principal part is singular at some grid point.
    """
    depth = a.depth if depth is None else depth
    if depth < 1 or depth > a.depth:
        raise ValueError(f"depth {depth} not representable (available: {a.depth})")
    a.require_elliptic()
    K = a.K_x
    sides = []
    for side_sign, pa in ((1, a.plus), (-1, a.minus)):
        inv0 = pa[0].inverse()
        b = [inv0]
        for n in range(1, depth):
            acc = FourierFunction.zeros(K, a.rank)
            for j in range(n + 1):
                for alpha in range(n - j + 1):
                    l = n - j - alpha
                    if l == n:
                        continue
                    c = _xi_derivative_coeff(a.order - j, alpha, side_sign)
                    if c == 0:
                        continue
                    coef = (-1j) ** alpha / factorial(alpha) * c
                    acc = acc + pa[j].scale(coef) * b[l].derivative(alpha)
            b.append(-(inv0 * acc))
        sides.append(tuple(b))
    return FormalSymbol(-a.order, sides[0], sides[1])


def order_reduction_symbol(o, depth, K_x=0, rank=1):
    """Formal expansion of ``(1 + xi^2)^(-o/2)``: binomial series in ``|xi|^-2``."""
    one = FourierFunction.identity(K_x, rank)
    comps = []
    for j in range(depth):
        if j % 2:
            comps.append(FourierFunction.zeros(K_x, rank))
        else:
            comps.append(one.scale(float(binom(-o / 2.0, j // 2))))
    return FormalSymbol(-o, tuple(comps), tuple(comps))


def order_reduce(a, depth=None):
    """Compose with ``(1 + xi^2)^(-o/2)`` so that the result has order 0."""
    depth = a.depth if depth is None else depth
    if a.order == 0:
        return a.truncate(depth)
    lam = order_reduction_symbol(a.order, depth, a.K_x, a.rank)
    return compose(lam, a, depth)


def random_symbol(rng, order=0, depth=4, K_x=4, rank=1, modes=2, scale=0.3,
                  elliptic=False):
    """Seeded random symbol with coefficients supported on ``|n| <= modes``.

    With ``elliptic=True`` the principal parts are ``1 + scale * (random)``
    with ``scale`` small enough to keep them invertible.
    """
    modes = min(modes, K_x)

    def ff(amp):
        c = np.zeros((2 * K_x + 1, rank, rank), dtype=complex)
        sl = slice(K_x - modes, K_x + modes + 1)
        c[sl] = amp * (rng.standard_normal(c[sl].shape) + 1j * rng.standard_normal(c[sl].shape))
        return FourierFunction(c)

    plus, minus = [], []
    for j in range(depth):
        p, m = ff(scale if elliptic and j == 0 else 1.0), ff(scale if elliptic and j == 0 else 1.0)
        if elliptic and j == 0:
            eye = FourierFunction.identity(K_x, rank)
            p, m = p.scale(1.0 / (2 * modes + 1)) + eye, m.scale(1.0 / (2 * modes + 1)) + eye
        plus.append(p)
        minus.append(m)
    return FormalSymbol(order, tuple(plus), tuple(minus))
