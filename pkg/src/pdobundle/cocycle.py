"""Lie-algebra cochains built from truncated traces.

The cochains live on a finite basis of quantized symbols (by default the
multiplication operators ``exp(inx)``, ``|n| <= N_b``, together with
``D = -i d/dx``).  Traces are taken over the interior window
``|k| <= K // 2`` and every table is recomputed at ``2K`` to flag values
that have not stabilized.

Coboundaries are handled in coordinates: an alternating ``q``-cochain is a
vector indexed by sorted ``q``-tuples of basis indices, and
:func:`coboundary_matrix` is the Chevalley-Eilenberg differential (trivial
coefficients) in those coordinates, built from structure constants fitted
by least squares on the window.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .connections import _perm_sign, curvature_closed_form
from .operators import _as_matrix, epsilon, interior, quantize
from .symbols import FormalSymbol

__all__ = [
    "SCHWINGER_NORMALIZATION",
    "NORMALIZATION_GRID",
    "BasisError",
    "Basis",
    "CochainTable",
    "Certificate",
    "CoboundaryFit",
    "window_trace",
    "schwinger",
    "curvature_trace",
    "four_cocycle_trace",
    "checked_value",
    "structure_constants",
    "coboundary_matrix",
    "cochain_coordinates",
    "cochain_from_coordinates",
    "schwinger_table",
    "curvature_table",
    "four_cocycle_table",
    "cocycle_residual",
    "coboundary_solve",
    "scan_normalizations",
    "nontriviality_certificate",
]

SCHWINGER_NORMALIZATION = "c_S(a,b) = (1/4) tr(eps [eps,a] [eps,b])"
NORMALIZATION_GRID = (1.0, -1.0, 0.5, -0.5, 0.25, -0.25, 2.0, -2.0)
STABLE_RTOL = 1e-8
EXPANSION_TOL = 1e-8


class BasisError(ValueError):
    """Commutators do not re-expand in the basis."""


def _dims(A):
    if hasattr(A, "K"):
        return A.K, A.r
    return (_as_matrix(A).shape[0] - 1) // 2, 1


def window_trace(M, K, r=1, window=None):
    """Trace over the diagonal blocks with ``|k| <= window`` (default ``K // 2``)."""
    w = K // 2 if window is None else window
    sl = slice((K - w) * r, (K + w + 1) * r)
    return complex(np.trace(_as_matrix(M)[sl, sl]))


def _eps_diag(K, r):
    return np.diag(epsilon(K, r).matrix).real


def schwinger(a, b, window=None):
    """``(1/4) tr(eps [eps, a] [eps, b])`` over the interior window."""
    K, r = _dims(a)
    e = _eps_diag(K, r)
    am, bm = _as_matrix(a), _as_matrix(b)
    ca = e[:, None] * am - am * e[None, :]
    cb = e[:, None] * bm - bm * e[None, :]
    return window_trace(e[:, None] * (ca @ cb), K, r, window) / 4


def curvature_trace(a, b, window=None):
    """``tr(Omega(a, b) (1 + eps))`` for the ``HalfPlus`` curvature."""
    K, r = _dims(a)
    e = _eps_diag(K, r)
    W = _as_matrix(curvature_closed_form(a, b, K, r))
    return window_trace(W * (1.0 + e)[None, :], K, r, window)


def four_cocycle_trace(a, b, c, d, window=None):
    """``tr(Omega^2(a, b, c, d) (1 + eps))`` with the antisymmetrized square."""
    from .connections import wedge_square

    K, r = _dims(a)
    e = _eps_diag(K, r)
    W = _as_matrix(wedge_square(lambda x, y: curvature_closed_form(x, y, K, r), a, b, c, d))
    return window_trace(W * (1.0 + e)[None, :], K, r, window)


@dataclass(frozen=True)
class CheckedValue:
    value: complex
    value_2K: complex
    stable: bool

    @property
    def change(self):
        return abs(self.value_2K - self.value)


def checked_value(fn, symbols, K, rtol=STABLE_RTOL):
    """Evaluate ``fn`` on the quantizations at ``K`` and ``2K``."""
    v1 = fn(*[quantize(s, K) for s in symbols])
    v2 = fn(*[quantize(s, 2 * K) for s in symbols])
    stable = abs(v2 - v1) <= rtol * max(abs(v2), 1.0)
    return CheckedValue(complex(v1), complex(v2), bool(stable))


@dataclass(frozen=True, eq=False)
class Basis:
    """Ordered basis of symbols with human-readable labels."""

    symbols: tuple
    labels: tuple

    def __len__(self):
        return len(self.symbols)

    @classmethod
    def default(cls, N_b=6, derivative=True):
        syms, labels = [], []
        for n in range(-N_b, N_b + 1):
            syms.append(FormalSymbol.exp_mode(n, K_x=N_b))
            labels.append(f"e^{{{n}ix}}")
        if derivative:
            syms.append(FormalSymbol.xi(K_x=N_b))
            labels.append("D")
        return cls(tuple(syms), tuple(labels))

    @classmethod
    def multiplication(cls, N_b=6):
        return cls.default(N_b, derivative=False)

    def quantized(self, K):
        return [quantize(s, K) for s in self.symbols]


def structure_constants(ops, window=None):
    """Fit ``[x_i, x_j] = sum_k C[i, j, k] x_k`` on the interior window.

    ``ops`` are :class:`TruncOperator` instances of a common size.

    Returns ``(C, residual)`` with the largest relative fit residual.

    Raises
    ------
    BasisError
        If some commutator leaves the span (residual above 1e-8).
    """
    nb = len(ops)
    B = np.stack([interior(o, window)[0].ravel() for o in ops], axis=1)
    C = np.zeros((nb, nb, nb), dtype=complex)
    worst = 0.0
    for i, j in combinations(range(nb), 2):
        com = ops[i] @ ops[j] - ops[j] @ ops[i]
        y = interior(com, window)[0].ravel()
        ny = np.linalg.norm(y)
        if ny == 0:
            continue
        coef = np.linalg.lstsq(B, y, rcond=None)[0]
        worst = max(worst, float(np.linalg.norm(B @ coef - y) / ny))
        C[i, j] = coef
        C[j, i] = -coef
    if worst > EXPANSION_TOL:
        raise BasisError(f"commutator expansion residual {worst:.3e} exceeds {EXPANSION_TOL:g}")
    return C, worst


def cochain_coordinates(values):
    """Entries of an alternating array on sorted index tuples."""
    q = values.ndim
    nb = values.shape[0]
    return np.array([values[t] for t in combinations(range(nb), q)])


def cochain_from_coordinates(coords, nb, q):
    """Alternating array from values on sorted tuples."""
    out = np.zeros((nb,) * q, dtype=complex)
    for val, t in zip(coords, combinations(range(nb), q)):
        for p in permutations(range(q)):
            out[tuple(t[i] for i in p)] = _perm_sign(p) * val
    return out


def _sorted_with_sign(idx):
    if len(set(idx)) < len(idx):
        return None, 0
    order = sorted(range(len(idx)), key=lambda i: idx[i])
    return tuple(idx[i] for i in order), _perm_sign(order)


def coboundary_matrix(C, q):
    """Differential from alternating ``(q-1)``-cochains to ``q``-cochains.

    ``(d eta)(x_0..x_{q-1}) = sum_{i<j} (-1)^(i+j) eta([x_i, x_j], rest)``.
    Rows are sorted ``q``-tuples, columns sorted ``(q-1)``-tuples.
    """
    nb = C.shape[0]
    rows = list(combinations(range(nb), q))
    cols = {t: n for n, t in enumerate(combinations(range(nb), q - 1))}
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for ri, t in enumerate(rows):
        for i, j in combinations(range(q), 2):
            rest = tuple(t[m] for m in range(q) if m not in (i, j))
            sgn = (-1) ** (i + j)
            for k in np.nonzero(C[t[i], t[j]])[0]:
                key, s = _sorted_with_sign((int(k),) + rest)
                if key is None:
                    continue
                M[ri, cols[key]] += sgn * s * C[t[i], t[j], k]
    return M


@dataclass(frozen=True, eq=False)
class CochainTable:
    """Alternating cochain values on a basis, with provenance metadata."""

    labels: tuple
    values: np.ndarray
    values_2K: np.ndarray
    K: int
    window: int
    normalization: str
    structure: np.ndarray
    expansion_residual: float
    kind: str = ""

    @property
    def degree(self):
        return self.values.ndim

    @property
    def max_change(self):
        return float(np.abs(self.values_2K - self.values).max(initial=0.0))

    @property
    def stable(self):
        scale = max(float(np.abs(self.values_2K).max(initial=0.0)), 1.0)
        return self.max_change <= STABLE_RTOL * scale

    def antisymmetry_error(self):
        v = self.values
        worst = 0.0
        for p in permutations(range(v.ndim)):
            worst = max(worst, float(np.abs(v.transpose(p) - _perm_sign(p) * v).max()))
        return worst

    def coordinates(self):
        return cochain_coordinates(self.values)

    def with_values(self, values, kind=None):
        return CochainTable(self.labels, values, values, self.K, self.window,
                            self.normalization, self.structure, self.expansion_residual,
                            self.kind if kind is None else kind)

    def scaled(self, c):
        return CochainTable(self.labels, c * self.values, c * self.values_2K, self.K,
                            self.window, f"{c:g} x ({self.normalization})", self.structure,
                            self.expansion_residual, self.kind)

    def to_dict(self):
        def cx(a):
            return [[float(z.real), float(z.imag)] for z in np.ravel(a)]
        return {"kind": self.kind, "basis": list(self.labels), "K": self.K,
                "window": self.window, "normalization": self.normalization,
                "degree": self.degree, "stable": self.stable, "max_change": self.max_change,
                "expansion_residual": self.expansion_residual,
                "values": cx(self.coordinates())}


def _pair_table(fn, mats, window):
    nb = len(mats)
    out = np.zeros((nb, nb), dtype=complex)
    for i, j in combinations(range(nb), 2):
        out[i, j] = fn(mats[i], mats[j], window)
        out[j, i] = -out[i, j]
    return out


def _build(kind, values_fn, basis, K, window, normalization):
    w = K // 2 if window is None else window
    ops = basis.quantized(K)
    C, res = structure_constants(ops, w)
    v1 = values_fn(ops, w)
    v2 = values_fn(basis.quantized(2 * K), w)
    return CochainTable(basis.labels, v1, v2, K, w, normalization, C, res, kind)


def schwinger_table(basis, K, window=None):
    return _build("schwinger", lambda ops, w: _pair_table(schwinger, ops, w),
                  basis, K, window, SCHWINGER_NORMALIZATION)


def curvature_table(basis, K, window=None):
    return _build("curvature_trace", lambda ops, w: _pair_table(curvature_trace, ops, w),
                  basis, K, window, "tr(Omega(a,b)(1+eps))")


def _four_values(ops, w):
    K, r = _dims(ops[0])
    nb = len(ops)
    e = _eps_diag(K, r)
    Om = {}
    for i, j in combinations(range(nb), 2):
        Om[i, j] = _as_matrix(curvature_closed_form(ops[i], ops[j], K, r))
        Om[j, i] = -Om[i, j]
    zero = np.zeros_like(_as_matrix(ops[0]))
    for i in range(nb):
        Om[i, i] = zero
    lo, hi = (K - w) * r, (K + w + 1) * r
    # tr_window(X Y (1+eps)) = sum_{i in window} sum_j X[i, j] (Y (1+eps))[j, i]
    right = {key: M[:, lo:hi] * (1.0 + e[lo:hi])[None, :] for key, M in Om.items()}
    rows = {key: M[lo:hi, :] for key, M in Om.items()}

    def tr(x, y):
        return np.sum(rows[x] * right[y].T)

    coords = []
    for a, b, c, d in combinations(range(nb), 4):
        coords.append(tr((a, b), (c, d)) - tr((a, c), (b, d)) + tr((a, d), (b, c))
                      + tr((b, c), (a, d)) - tr((b, d), (a, c)) + tr((c, d), (a, b)))
    return cochain_from_coordinates(np.array(coords), nb, 4)


def four_cocycle_table(basis, K, window=None):
    return _build("four_cocycle", _four_values, basis, K, window,
                  "tr(Omega^2(a,b,c,d)(1+eps)), Omega^2 = (1/4) sum sgn Omega Omega")


def cocycle_residual(table):
    """Largest entry of the coboundary of ``table`` (zero for a cocycle)."""
    q = table.degree
    M = coboundary_matrix(table.structure, q + 1)
    if M.size == 0:
        return 0.0
    return float(np.abs(M @ table.coordinates()).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class CoboundaryFit:
    coefficients: np.ndarray
    residual: float
    absolute_residual: float
    factor: float = 1.0


def coboundary_solve(c1, c2, factor=1.0):
    """Least-squares ``lam`` with ``c1 - factor * c2 = d lam``.

    ``residual`` is relative to the norm of ``c1 - factor * c2`` (zero when
    that difference vanishes).  For 2-cochains the coefficients satisfy
    ``(c1 - factor c2)(x, y) = lam([x, y])``; in higher degree they are the
    cochain ``eta`` with ``c1 - factor c2 = d eta`` (see
    :func:`coboundary_matrix`).
    """
    if c1.labels != c2.labels or c1.degree != c2.degree:
        raise ValueError("cochains live on different bases or degrees")
    rhs = c1.coordinates() - factor * c2.coordinates()
    M = coboundary_matrix(c1.structure, c1.degree)
    nr = np.linalg.norm(rhs)
    if nr == 0:
        return CoboundaryFit(np.zeros(M.shape[1], dtype=complex), 0.0, 0.0, factor)
    lam = np.linalg.lstsq(M, rhs, rcond=None)[0]
    res = np.linalg.norm(M @ lam - rhs)
    if c1.degree == 2:
        lam = -lam  # d lam (x, y) = -lam([x, y])
    return CoboundaryFit(lam, float(res / nr), float(res), factor)


def scan_normalizations(c1, c2, grid=NORMALIZATION_GRID):
    """Coboundary fits of ``c1`` against ``f * c2`` for each ``f`` in ``grid``, best first."""
    fits = [coboundary_solve(c1, c2, f) for f in grid]
    return sorted(fits, key=lambda f: f.residual)


@dataclass(frozen=True)
class Certificate:
    residual: float
    max_value: float
    passed: bool

    def record(self):
        return {"residual": self.residual, "max_value": self.max_value, "pass": self.passed}


def nontriviality_certificate(table, ratio=0.1):
    """Distance from ``table`` to the coboundaries; passes when ``>= ratio * max|c|``."""
    coords = table.coordinates()
    M = coboundary_matrix(table.structure, table.degree)
    if np.abs(M).max(initial=0.0) == 0:
        res = float(np.linalg.norm(coords))
    else:
        lam = np.linalg.lstsq(M, coords, rcond=None)[0]
        res = float(np.linalg.norm(M @ lam - coords))
    mx = float(np.abs(coords).max(initial=0.0))
    return Certificate(res, mx, bool(mx > 0 and res >= ratio * mx))
