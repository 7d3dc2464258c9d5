"""Command-line front end.

::

    pdobundle symbols compose --in a.json --in2 b.json --out c.json
    pdobundle verify all --K 16 --seed 0 --report report.json
    pdobundle sweep --K-list 8,16,32 --what cocycle --out sweep.csv

Exit codes: 0 success, 1 failed criterion, 2 unreadable input or bad
flags, 3 mathematical precondition violated (e.g. a non-elliptic symbol),
4 resource exhaustion.  Reports go to ``--report`` or, when the
``PDOBUNDLE_OUTPUT_DIR`` environment variable is set, to
``$PDOBUNDLE_OUTPUT_DIR/verify-<suite>.json``.  ``--config`` names a JSON
file whose keys mirror the long flag names (``K``, ``seed``, ``K_list``,
...); explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .operators import SingularOperatorError, SmoothingThresholdError
from .symbols import NotEllipticError, adjoint, compose, order_reduce, parametrix

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_MATH, EXIT_RESOURCES = 0, 1, 2, 3, 4
OUTPUT_DIR_ENV = "PDOBUNDLE_OUTPUT_DIR"

_DEFAULTS = {"K": 16, "depth": 4, "tol": 1e-8, "seed": 0, "report": None,
             "K_list": None, "what": "decay", "out": None}


class InputError(Exception):
    """Bad flags, config or input files (exit 2)."""


def _parser():
    p = argparse.ArgumentParser(prog="pdobundle",
                                description="Truncated pseudo-differential operator bundles.")
    p.add_argument("--config", help="JSON file with default flag values")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("symbols", help="symbol calculus on symbol files")
    s.add_argument("op", choices=["compose", "adjoint", "parametrix", "order-reduce"])
    s.add_argument("--in", dest="inp", required=True, help="input symbol file")
    s.add_argument("--in2", help="second operand (compose)")
    s.add_argument("--depth", type=int, help="retained depth (default: all available)")
    s.add_argument("--out", help="output file (default: standard output)")

    v = sub.add_parser("verify", help="run property suites and write a report")
    v.add_argument("suite", choices=["connections", "transport", "fredholm", "cocycle", "all"])
    v.add_argument("--K", type=int)
    v.add_argument("--depth", type=int)
    v.add_argument("--tol", type=float)
    v.add_argument("--seed", type=int)
    v.add_argument("--report", help="report path")

    w = sub.add_parser("sweep", help="measure a quantity across truncation sizes")
    w.add_argument("--K-list", dest="K_list", nargs="*", help="e.g. 8,16,32 or 8 16 32")
    w.add_argument("--what", choices=["decay", "cocycle", "holonomy"])
    w.add_argument("--seed", type=int)
    w.add_argument("--out", help="CSV path (default: standard output)")
    return p


def _merge_config(args):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
    for key, default in _DEFAULTS.items():
        if key == "depth" and args.command == "symbols":
            default = None  # symbol operations keep all available depth
        if getattr(args, key, "absent") is None:
            setattr(args, key, cfg.get(key, default))
    return args


# -- symbols ------------------------------------------------------------------------

def _read_symbol(path):
    try:
        return io.read_symbol(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def cmd_symbols(args):
    a = _read_symbol(args.inp)
    if args.op == "compose":
        if not args.in2:
            raise InputError("compose needs --in2")
        out = compose(a, _read_symbol(args.in2), args.depth)
    elif args.op == "adjoint":
        out = adjoint(a, args.depth)
    elif args.op == "parametrix":
        out = parametrix(a, args.depth)
    else:
        out = order_reduce(a, args.depth)
    text = io.dumps_symbol(out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- verify -------------------------------------------------------------------------

def _report_path(args):
    if args.report:
        return Path(args.report)
    if os.environ.get(OUTPUT_DIR_ENV):
        return Path(os.environ[OUTPUT_DIR_ENV]) / f"verify-{args.suite}.json"
    return None


def cmd_verify(args):
    from .verify import SUITES, SuiteConfig, run_criteria

    if args.K < 2 or args.depth < 2 or args.tol <= 0:
        raise InputError("need K >= 2, depth >= 2 and tol > 0")
    cfg = SuiteConfig(K=args.K, depth=args.depth, tol=args.tol, seed=args.seed)
    criteria = run_criteria(SUITES[args.suite], cfg)
    report = io.make_report(f"verify {args.suite}", cfg.as_dict(), criteria)
    for num, c in criteria.items():
        flag = "PASS" if c["pass"] else "FAIL"
        print(f"[{flag}] criterion {num}: {c['name']}")
        for w in c["warnings"]:
            print(f"       warning: {w}")
    path = _report_path(args)
    if path is not None:
        io.write_report(path, report)
        print(f"report written to {path}")
    return EXIT_OK if report["payload"]["all_pass"] else EXIT_FAILED


# -- sweep ----------------------------------------------------------------------------

def _parse_K_list(values):
    out = []
    for v in values or []:
        for part in str(v).split(","):
            if part.strip():
                try:
                    out.append(int(part))
                except ValueError as exc:
                    raise InputError(f"bad K value {part!r}") from exc
    if not out:
        raise InputError("empty K list")
    if min(out) < 2:
        raise InputError("K values must be >= 2")
    return out


def _sweep_rows(what, Ks, seed):
    from .connections import ConnectionForm, curvature_closed_form, curvature_holonomy
    from .cocycle import curvature_trace, schwinger
    from .operators import decay_profile, quantize
    from .symbols import FormalSymbol, compose, random_symbol

    rows = []
    if what == "decay":
        rng = np.random.default_rng(seed)
        a = random_symbol(rng, 0, 4, 4, modes=2)
        b = random_symbol(rng, -1, 4, 4, modes=2)
        ab = compose(a, b)
        for K in Ks:
            D = quantize(ab, K) - quantize(a, K) @ quantize(b, K)
            prof = decay_profile(D, 2, window=K // 2)
            rows.append((K, "fitted_exponent", prof.exponent, prof.s_p))
    elif what == "cocycle":
        e1, em1 = FormalSymbol.exp_mode(1), FormalSymbol.exp_mode(-1)
        for K in Ks:
            x, y = quantize(e1, K), quantize(em1, K)
            cs = schwinger(x, y)
            ct = curvature_trace(x, y)
            rows.append((K, "schwinger(e^{ix},e^{-ix})", cs.real, abs(cs + 1)))
            rows.append((K, "curvature_trace(e^{ix},e^{-ix})", ct.real, abs(ct - 2 * cs)))
    else:
        e1, em1 = FormalSymbol.exp_mode(1), FormalSymbol.exp_mode(-1)
        for K in Ks:
            x, y = quantize(e1, K), quantize(em1, K)
            C = curvature_closed_form(x, y)
            W = curvature_holonomy(ConnectionForm.half_plus(K), x, y)
            rows.append((K, "curvature_norm", float(np.linalg.norm(C.matrix)),
                         float(np.abs((W - C).matrix).max())))
    return rows


def cmd_sweep(args):
    Ks = _parse_K_list(args.K_list)
    rows = _sweep_rows(args.what, Ks, args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "quantity", "value", "residual"])
        for K, q, v, r in rows:
            w.writerow([K, q, repr(float(v)), repr(float(r))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _merge_config(args)
        handler = {"symbols": cmd_symbols, "verify": cmd_verify, "sweep": cmd_sweep}[args.command]
        return handler(args)
    except (InputError, io.SymbolFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotEllipticError, SingularOperatorError, SmoothingThresholdError,
            np.linalg.LinAlgError, ValueError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    except MemoryError:
        print("out of memory", file=sys.stderr)
        return EXIT_RESOURCES


if __name__ == "__main__":
    sys.exit(main())
