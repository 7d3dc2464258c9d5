"""Truncated Fourier-matrix operators on the circle.

Operators act on sections of the trivial rank-``r`` bundle, discretized on
the Fourier modes ``|k| <= K``.  Basis vector ``(k, i)`` sits at matrix
index ``(k + K) * r + i``; the basis ``exp(ikx)/sqrt(2 pi)`` is orthonormal,
so the L2 adjoint is the conjugate transpose.

Conventions (fixed here, recorded in every report):

* ``K0_EVALUATION``: at ``k = 0`` only degree-0 plus components of a symbol
  contribute to its quantization, so ``quantize(1) = Id``.
* ``SIGN_AT_ZERO``: ``epsilon(D)`` takes the value ``+1`` on mode 0, which
  makes it an involution.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .symbols import FormalSymbol

__all__ = [
    "TruncOperator",
    "DecayProfile",
    "BundleElement",
    "SingularOperatorError",
    "SmoothingThresholdError",
    "K0_EVALUATION",
    "SIGN_AT_ZERO",
    "COND_LIMIT",
    "SMOOTHING_GRADE",
    "quantize",
    "epsilon",
    "hardy_projection",
    "identity",
    "mode_projector",
    "decay_profile",
    "fit_decay_exponent",
    "is_smoothing",
    "interior",
    "multiply",
    "adjoint",
    "inverse",
    "commutator",
    "exp_path",
    "condition_number",
    "make_bundle_element",
    "random_smoothing",
    "random_group_element",
    "content_hash",
]

K0_EVALUATION = "nonzero-degree components vanish at k=0"
SIGN_AT_ZERO = 1
COND_LIMIT = 1e12
# minimal fitted antidiagonal decay exponent accepted as "smoothing"
SMOOTHING_GRADE = 6.0


class SingularOperatorError(np.linalg.LinAlgError):
    def __init__(self, message, condition=np.inf):
        super().__init__(message)
        self.condition = condition


class SmoothingThresholdError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TruncOperator:
    """Complex matrix on Fourier modes ``|k| <= K`` with ``r x r`` blocks."""

    matrix: np.ndarray
    K: int
    r: int = 1
    provenance: str = "composite"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = (2 * self.K + 1) * self.r
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match K={self.K}, r={self.r}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def modes(self):
        return np.arange(-self.K, self.K + 1)

    def block(self, m, k):
        r = self.r
        i, j = (m + self.K) * r, (k + self.K) * r
        return self.matrix[i: i + r, j: j + r]

    def _wrap(self, m, provenance="composite"):
        return TruncOperator(m, self.K, self.r, provenance)

    def _other(self, other):
        if isinstance(other, TruncOperator):
            if (other.K, other.r) != (self.K, self.r):
                raise ValueError(f"dimension mismatch: (K={self.K}, r={self.r}) vs "
                                 f"(K={other.K}, r={other.r})")
            return other.matrix
        return np.asarray(other)

    def __matmul__(self, other):
        return self._wrap(self.matrix @ self._other(other))

    def __rmatmul__(self, other):
        return self._wrap(np.asarray(other) @ self.matrix)

    def __add__(self, other):
        return self._wrap(self.matrix + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.matrix - self._other(other))

    def __rsub__(self, other):
        return self._wrap(np.asarray(other) - self.matrix)

    def __neg__(self):
        return self._wrap(-self.matrix, self.provenance)

    def __mul__(self, c):
        return self._wrap(c * self.matrix, self.provenance)

    __rmul__ = __mul__

    @property
    def H(self):
        return self._wrap(self.matrix.conj().T, self.provenance)

    def norm(self, ord="fro"):
        return float(np.linalg.norm(self.matrix, ord))

    def hash(self):
        return content_hash(self)


def _as_matrix(A):
    return A.matrix if isinstance(A, TruncOperator) else np.asarray(A)


def _like(A, m, provenance="composite"):
    if isinstance(A, TruncOperator):
        return TruncOperator(m, A.K, A.r, provenance)
    return m


def content_hash(A):
    """SHA-256 of the (K, r) header and the little-endian complex128 entries."""
    m = np.ascontiguousarray(_as_matrix(A), dtype="<c16")
    h = hashlib.sha256()
    if isinstance(A, TruncOperator):
        h.update(f"K={A.K};r={A.r};".encode())
    h.update(m.tobytes())
    return h.hexdigest()


def identity(K, r=1):
    return TruncOperator(np.eye((2 * K + 1) * r), K, r, "quantized")


def mode_projector(K, modes=(0,), r=1):
    """Orthogonal projector onto the given Fourier modes."""
    d = np.zeros((2 * K + 1) * r)
    for k in modes:
        d[(k + K) * r: (k + K + 1) * r] = 1.0
    return TruncOperator(np.diag(d), K, r, "smoothing")


def quantize(a: FormalSymbol, K: int) -> TruncOperator:
    """Fourier-matrix realization: entry ``(m, k)`` is mode ``m - k`` of ``sigma(., k)``."""
    if K < a.K_x:
        warnings.warn(f"K={K} is smaller than the symbol mode bound K_x={a.K_x}; "
                      "coefficients are cut by the matrix size", stacklevel=2)
    r, Kx = a.rank, a.K_x
    ks = np.arange(-K, K + 1).astype(float)
    degrees = a.order - np.arange(a.depth)
    absk = np.abs(ks)
    with np.errstate(divide="ignore"):
        W = np.where(absk[None, :] > 0, absk[None, :] ** degrees[:, None].astype(float), 0.0)
    W[:, ks == 0] = (degrees == 0).astype(float)[:, None]
    P = np.stack([f.coeffs for f in a.plus])
    Mi = np.stack([f.coeffs for f in a.minus])
    Cp = np.einsum("jk,jnab->knab", W, P)
    Cm = np.einsum("jk,jnab->knab", W, Mi)
    C = np.where((ks >= 0)[:, None, None, None], Cp, Cm)  # k = 0 uses plus parts
    M4 = np.zeros((2 * K + 1, r, 2 * K + 1, r), dtype=complex)
    kk = np.arange(-K, K + 1)
    for n in range(-Kx, Kx + 1):
        ok = np.abs(kk + n) <= K
        cols = kk[ok] + K
        M4[cols + n, :, cols, :] = C[cols, n + Kx]
    return TruncOperator(M4.reshape((2 * K + 1) * r, (2 * K + 1) * r), K, r, "quantized")


def epsilon(K, r=1):
    """``epsilon(D) = D |D|^{-1}``, block ``sign(k) Id_r`` with ``sign(0) = +1``."""
    s = np.where(np.arange(-K, K + 1) >= 0, 1.0, -1.0)
    return TruncOperator(np.diag(np.repeat(s, r)).astype(complex), K, r, "quantized")


def hardy_projection(K, r=1, positive=True):
    """``(1 + eps)/2`` (or ``(1 - eps)/2`` with ``positive=False``)."""
    e = epsilon(K, r).matrix
    n = e.shape[0]
    return TruncOperator((np.eye(n) + (e if positive else -e)) / 2, K, r, "quantized")


def interior(A, window=None):
    """Restriction to modes ``|m|, |k| <= window`` (default ``K // 2``)."""
    m = _as_matrix(A)
    K, r = (A.K, A.r) if isinstance(A, TruncOperator) else ((m.shape[0] - 1) // 2, 1)
    w = K // 2 if window is None else window
    sl = slice((K - w) * r, (K + w + 1) * r)
    return m[sl, sl], w


@dataclass(frozen=True, eq=False)
class DecayProfile:
    """Weighted sup-norms ``s_p = max (1 + |m| + |k|)^p |A(m, k)|``.

    ``antidiagonal_max[d]`` is the largest block norm with ``|m| + |k| = d``
    so ``s_p`` can be recomputed for any ``p``.
    """

    p: int
    s_p: float
    antidiagonal_max: np.ndarray
    exponent: float
    window: int

    def s(self, p):
        d = np.arange(len(self.antidiagonal_max))
        return float(((1.0 + d) ** p * self.antidiagonal_max).max(initial=0.0))

    def is_smoothing(self, grade=SMOOTHING_GRADE):
        return self.exponent >= grade

    def as_dict(self):
        return {"p": self.p, "s_p": self.s_p, "fitted_exponent": _finite_or_str(self.exponent),
                "window": self.window}


def _finite_or_str(x):
    return float(x) if np.isfinite(x) else "inf"


def fit_decay_exponent(table, floor=1e-13):
    """Power-law exponent of the antidiagonal maxima tail.

    Fits ``log(max_d) ~ -e log(1 + d)`` on the upper three quarters of the
    ``d`` range using entries above ``floor * peak``.  Returns ``inf`` when
    the tail lies entirely below the floor (finite support to working
    precision).
    """
    table = np.asarray(table, dtype=float)
    peak = table.max(initial=0.0)
    if peak == 0:
        return np.inf
    D = len(table) - 1
    d = np.arange(len(table))
    tail = (d >= max(1, D // 4)) & (table > floor * peak)
    if tail.sum() < 2:
        return np.inf
    slope = np.polyfit(np.log1p(d[tail]), np.log(table[tail]), 1)[0]
    return float(-slope)


def decay_profile(A, p=2, window=None, floor=1e-13):
    """Decay profile of ``A`` over the modes ``|m|, |k| <= window`` (default: all)."""
    m = _as_matrix(A)
    K, r = (A.K, A.r) if isinstance(A, TruncOperator) else ((m.shape[0] - 1) // 2, 1)
    if window is not None:
        m, w = interior(A, window)
    else:
        w = K
    n = 2 * w + 1
    blocks = m.reshape(n, r, n, r).transpose(0, 2, 1, 3)
    if r == 1:
        norms = np.abs(blocks[:, :, 0, 0])
    else:
        norms = np.linalg.norm(blocks, 2, axis=(2, 3))
    modes = np.abs(np.arange(-w, w + 1))
    dd = modes[:, None] + modes[None, :]
    table = np.zeros(2 * w + 1)
    np.maximum.at(table, dd.ravel(), norms.ravel())
    s_p = float(((1.0 + np.arange(2 * w + 1)) ** p * table).max(initial=0.0))
    return DecayProfile(p, s_p, table, fit_decay_exponent(table, floor), w)


def is_smoothing(A, grade=SMOOTHING_GRADE, window=None):
    """Smoothing certification on the interior window (default ``K // 2``)."""
    K = A.K if isinstance(A, TruncOperator) else (_as_matrix(A).shape[0] - 1) // 2
    return decay_profile(A, window=K // 2 if window is None else window).is_smoothing(grade)


def condition_number(A):
    s = np.linalg.svd(_as_matrix(A), compute_uv=False)
    return np.inf if s[-1] == 0 else float(s[0] / s[-1])


def multiply(A, B):
    return _like(A, _as_matrix(A) @ _as_matrix(B))


def adjoint(A):
    return _like(A, _as_matrix(A).conj().T)


def inverse(A):
    """Matrix inverse; refuses when the condition estimate reaches ``COND_LIMIT``."""
    cond = condition_number(A)
    if not cond < COND_LIMIT:
        raise SingularOperatorError(f"operator is singular (condition {cond:.3e})", cond)
    return _like(A, np.linalg.inv(_as_matrix(A)))


def commutator(A, B):
    a, b = _as_matrix(A), _as_matrix(B)
    return _like(A, a @ b - b @ a)


def exp_path(v, t=1.0):
    """``exp(t v)``: the one-parameter subgroup with constant right-log velocity ``v``."""
    return _like(v, scipy.linalg.expm(t * _as_matrix(v)))


@dataclass(frozen=True, eq=False)
class BundleElement:
    """Point of the bundle ``Cl^*`` over formal symbols: (base symbol, total operator)."""

    base: FormalSymbol
    total: TruncOperator
    defect: DecayProfile

    def act(self, h):
        """Right action of ``h`` (in ``G = Id + smoothing``) on the total space."""
        total = self.total @ h
        return BundleElement(self.base, total,
                             decay_profile(total - quantize(self.base, self.total.K),
                                           self.defect.p))


def make_bundle_element(a, R=None, K=16, p=2, threshold=1e4):
    """Pair ``a`` with ``quantize(a, K) + R`` after invertibility and defect checks.

    Raises
    ------
    SingularOperatorError
        When the total operator is not invertible.
    SmoothingThresholdError
        When ``s_p`` of the defect exceeds ``threshold``.
    """
    Q = quantize(a, K)
    if R is None:
        R = TruncOperator(np.zeros_like(Q.matrix), K, a.rank, "smoothing")
    total = Q + R
    total = TruncOperator(total.matrix, K, a.rank, "composite")
    cond = condition_number(total)
    if not cond < COND_LIMIT:
        raise SingularOperatorError(f"total operator is singular (condition {cond:.3e})", cond)
    prof = decay_profile(R, p)
    if prof.s_p > threshold:
        raise SmoothingThresholdError(f"defect s_{p} = {prof.s_p:.3e} exceeds {threshold:.3e}")
    return BundleElement(a, total, prof)


def random_smoothing(rng, K, r=1, rate=1.0, amplitude=1.0):
    """Random operator with entries ``~ amplitude * N(0,1) * exp(-rate (|m| + |k|))``."""
    n = (2 * K + 1) * r
    modes = np.repeat(np.abs(np.arange(-K, K + 1)), r)
    w = np.exp(-rate * (modes[:, None] + modes[None, :]))
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return TruncOperator(amplitude * w * z / np.sqrt(2), K, r, "smoothing")


def random_group_element(rng, K, r=1, rate=1.0, amplitude=0.3):
    """``Id + R`` with ``R`` random smoothing, resampled until well conditioned."""
    for _ in range(32):
        h = identity(K, r) + random_smoothing(rng, K, r, rate, amplitude)
        if condition_number(h) < 1e6:
            return TruncOperator(h.matrix, K, r, "composite")
    raise SingularOperatorError("could not draw a well-conditioned group element")
