"""File formats: symbols, matrices, paths, cochain tables and reports.

Symbol files are JSON documents::

    {"format": "pdobundle-symbol", "version": 1,
     "order": 0, "depth": 2, "rank": 1, "K_x": 1,
     "components": [{"plus": [[mode, re, im], ...], "minus": [...]}, ...]}

For ``rank > 1`` each of ``plus`` / ``minus`` is an ``r x r`` nested list of
triple lists.  Only nonzero coefficients are written; floats use the
shortest round-tripping representation, so reading then writing a file
reproduces it byte for byte.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .operators import SIGN_AT_ZERO, TruncOperator, _as_matrix, content_hash
from .symbols import FormalSymbol, FourierFunction

__all__ = [
    "SymbolFormatError",
    "SCHEMA_VERSION",
    "CONVENTIONS",
    "symbol_to_dict",
    "symbol_from_dict",
    "dumps_symbol",
    "loads_symbol",
    "write_symbol",
    "read_symbol",
    "save_matrix",
    "load_matrix",
    "save_path",
    "load_path",
    "save_cochain",
    "make_report",
    "write_report",
    "report_payload_bytes",
]

SYMBOL_FORMAT = "pdobundle-symbol"
SCHEMA_VERSION = "1.0"

CONVENTIONS = {
    "sign_at_zero": SIGN_AT_ZERO,
    "k0_evaluation": "only degree-0 plus components contribute at k = 0",
    "extension_rule": "ad_twisted: theta_g(v) = g^-1 theta_0(v g^-1) g",
    "curvature_extension_rule": "left_invariant: theta_g(v) = theta_0(g^-1 v)",
    "holonomy_sign": "hol = Id - h^2 Omega + O(h^3) for g' = -A g",
    "schwinger_normalization": "c_S(a,b) = (1/4) tr(eps [eps,a] [eps,b])",
    "trace_window": "|k| <= K // 2",
    "smoothing_grade": 6.0,
}


class SymbolFormatError(ValueError):
    """Malformed symbol document."""


def _num(x):
    x = float(x)
    return 0.0 if x == 0 else x


def _triples(coeffs):
    K = (coeffs.shape[0] - 1) // 2
    return [[int(m), _num(c.real), _num(c.imag)]
            for m, c in zip(range(-K, K + 1), coeffs) if c != 0]


def _function_to_json(f):
    c = f.coeffs
    if f.rank == 1:
        return _triples(c[:, 0, 0])
    return [[_triples(c[:, i, j]) for j in range(f.rank)] for i in range(f.rank)]


def _function_from_json(obj, K, rank):
    c = np.zeros((2 * K + 1, rank, rank), dtype=complex)

    def fill(triples, i, j):
        if not isinstance(triples, list):
            raise SymbolFormatError("coefficient list expected")
        for t in triples:
            if not (isinstance(t, list) and len(t) == 3):
                raise SymbolFormatError(f"bad coefficient triple {t!r}")
            m, re, im = t
            if not isinstance(m, int) or abs(m) > K:
                raise SymbolFormatError(f"mode {m!r} outside |m| <= {K}")
            c[m + K, i, j] = complex(float(re), float(im))

    if rank == 1:
        fill(obj, 0, 0)
    else:
        if not (isinstance(obj, list) and len(obj) == rank and all(len(row) == rank for row in obj)):
            raise SymbolFormatError(f"expected a {rank}x{rank} nested list")
        for i in range(rank):
            for j in range(rank):
                fill(obj[i][j], i, j)
    return FourierFunction(c)


def symbol_to_dict(a):
    return {
        "format": SYMBOL_FORMAT,
        "version": 1,
        "order": a.order,
        "depth": a.depth,
        "rank": a.rank,
        "K_x": a.K_x,
        "components": [{"plus": _function_to_json(p), "minus": _function_to_json(m)}
                       for p, m in zip(a.plus, a.minus)],
    }


def symbol_from_dict(d):
    try:
        if d.get("format", SYMBOL_FORMAT) != SYMBOL_FORMAT:
            raise SymbolFormatError(f"unknown format {d.get('format')!r}")
        order, depth, rank, K = (d[k] for k in ("order", "depth", "rank", "K_x"))
        for name, v in (("order", order), ("depth", depth), ("rank", rank), ("K_x", K)):
            if not isinstance(v, int) or isinstance(v, bool):
                raise SymbolFormatError(f"{name} must be an integer")
        if depth < 1 or rank < 1 or K < 0:
            raise SymbolFormatError("need depth >= 1, rank >= 1, K_x >= 0")
        comps = d["components"]
        if len(comps) != depth:
            raise SymbolFormatError(f"{len(comps)} components listed, depth is {depth}")
        plus = [_function_from_json(c["plus"], K, rank) for c in comps]
        minus = [_function_from_json(c["minus"], K, rank) for c in comps]
    except (KeyError, TypeError, AttributeError) as exc:
        raise SymbolFormatError(f"malformed symbol document: {exc}") from exc
    return FormalSymbol(order, tuple(plus), tuple(minus))


def dumps_symbol(a):
    return json.dumps(symbol_to_dict(a), indent=1) + "\n"


def loads_symbol(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SymbolFormatError(f"not a JSON document: {exc}") from exc
    if not isinstance(d, dict):
        raise SymbolFormatError("top level must be an object")
    return symbol_from_dict(d)


def write_symbol(path, a):
    Path(path).write_text(dumps_symbol(a))


def read_symbol(path):
    return loads_symbol(Path(path).read_text())


# -- matrices -----------------------------------------------------------------

def save_matrix(path, A, K=None, r=1, provenance=None):
    """Write a matrix with its ``(K, r, provenance)`` header.

    ``.npz`` files are binary; anything else is a text table with a ``#``
    header and columns ``re im`` interleaved per entry.
    """
    m = _as_matrix(A)
    if isinstance(A, TruncOperator):
        K, r, provenance = A.K, A.r, provenance or A.provenance
    K = (m.shape[0] // r - 1) // 2 if K is None else K
    provenance = provenance or "composite"
    path = Path(path)
    if path.suffix == ".npz":
        np.savez(path, matrix=m, K=K, r=r, provenance=provenance)
    else:
        table = np.empty((m.shape[0], 2 * m.shape[1]))
        table[:, 0::2], table[:, 1::2] = m.real, m.imag
        header = json.dumps({"K": K, "r": r, "provenance": provenance,
                             "hash": content_hash(TruncOperator(m, K, r, provenance))})
        np.savetxt(path, table, header=header, fmt="%.17g")
    return content_hash(TruncOperator(m, K, r, provenance))


def load_matrix(path):
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            return TruncOperator(z["matrix"], int(z["K"]), int(z["r"]), str(z["provenance"]))
    with path.open() as fh:
        header = json.loads(fh.readline().lstrip("#").strip())
    table = np.loadtxt(path, ndmin=2)
    return TruncOperator(table[:, 0::2] + 1j * table[:, 1::2], header["K"], header["r"],
                         header["provenance"])


# -- paths ----------------------------------------------------------------------

def save_path(stem, path_sample):
    """Write ``stem.json`` (node grid, matrix hashes, residuals) and ``stem.npz``."""
    stem = Path(stem)
    hashes, arrays = [], {}
    for v in path_sample.values:
        h = content_hash(TruncOperator(v, path_sample.K, path_sample.r, "composite"))
        hashes.append(h)
        arrays[h] = v
    doc = {"K": path_sample.K, "r": path_sample.r,
           "nodes": [float(t) for t in path_sample.nodes],
           "matrices": hashes,
           "matrix_file": stem.with_suffix(".npz").name,
           "residuals": None if path_sample.residuals is None
           else [float(x) for x in path_sample.residuals],
           "substeps": path_sample.substeps}
    np.savez(stem.with_suffix(".npz"), **arrays)
    stem.with_suffix(".json").write_text(json.dumps(doc, indent=1) + "\n")
    return doc


def load_path(stem):
    from .transport import PathSample

    stem = Path(stem)
    doc = json.loads(stem.with_suffix(".json").read_text())
    with np.load(stem.parent / doc["matrix_file"]) as z:
        vals = [z[h] for h in doc["matrices"]]
    return PathSample.from_values(doc["nodes"], vals, doc["K"], doc["r"])


# -- cochains and reports ----------------------------------------------------------

def save_cochain(path, table):
    Path(path).write_text(json.dumps(table.to_dict(), indent=1) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def make_report(command, params, criteria, extra=None):
    """Report document: a deterministic ``payload`` plus a separate timestamp."""
    payload = {"command": command, "parameters": params, "conventions": CONVENTIONS,
               "criteria": criteria, "all_pass": all(c.get("pass", False) for c in criteria.values())}
    if extra:
        payload.update(extra)
    return {"schema_version": SCHEMA_VERSION,
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "payload": _jsonable(payload)}


def report_payload_bytes(report):
    return json.dumps(report["payload"], sort_keys=True).encode()


def write_report(path, report):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
