"""Property suites with pass/fail verdicts.

Each ``criterion_*`` function runs one seeded experiment and returns a
plain dictionary::

    {"name": ..., "pass": bool, "measured": {...}, "thresholds": {...},
     "warnings": [...], "notes": "..."}

The command-line front end and the acceptance tests both call these, so a
report produced by ``pdobundle verify`` contains exactly the numbers the
tests check.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import permutations

import numpy as np

from . import cocycle as cc
from .connections import (ConnectionForm, Family, check_covariance, curvature_closed_form,
                          curvature_holonomy, value_at, value_at_identity)
from .fredholm import lift_invertible, lift_invertible_of_matrix
from .operators import (SMOOTHING_GRADE, TruncOperator, decay_profile, identity,
                        make_bundle_element, mode_projector, quantize, random_group_element,
                        random_smoothing)
from .symbols import (FormalSymbol, FourierFunction, adjoint, compose, parametrix,
                      random_symbol)
from .transport import (PathSample, equivariance_check, horizontal_lift, horizontal_project,
                        integrate_gauge)

__all__ = [
    "SuiteConfig",
    "CRITERIA",
    "SUITES",
    "run_criteria",
    "run_suite",
    "planted_kernel_symbol",
    "fredholm_test_symbols",
]


@dataclass(frozen=True)
class SuiteConfig:
    """Scale and seeds of the property suites.

    ``K_cocycle`` defaults to ``2 K``.
    """

    K: int = 16
    K_cocycle: int | None = None
    depth: int = 4
    tol: float = 1e-8
    seed: int = 0
    n_symbols: int = 100
    n_pairs: int = 25
    n_triples: int = 20
    n_lift: int = 25
    N_b: int = 6

    @property
    def Kc(self):
        return 2 * self.K if self.K_cocycle is None else self.K_cocycle

    def as_dict(self):
        out = asdict(self)
        out["K_cocycle"] = self.Kc
        return out


MIN_DECAY_WINDOW = 4


def _decay_resolvable(K, warnings):
    """Decay fits need a window of at least ``MIN_DECAY_WINDOW`` modes."""
    if K // 2 < MIN_DECAY_WINDOW:
        warnings.append(f"K = {K}: window |k| <= {K // 2} too small to resolve decay; "
                        "smoothing certification not evaluated")
        return False
    return True


def _rng(cfg, offset):
    return np.random.default_rng([cfg.seed, offset])


def _result(name, passed, measured, thresholds, warnings=(), notes=""):
    return {"name": name, "pass": bool(passed), "measured": measured,
            "thresholds": thresholds, "warnings": list(warnings), "notes": notes}


def _coef_scale(a):
    return max(1.0, max(float(np.abs(f.coeffs).max()) for f in a.plus + a.minus))


def _rel(x, y):
    return x.max_abs_diff(y) / _coef_scale(y)


# -- 1, 2: symbol algebra and quantization -------------------------------------------

def criterion_symbol_algebra(cfg):
    """Associativity, unit, parametrix defect and adjoint anti-homomorphism."""
    rng = _rng(cfg, 1)
    N, Kx = cfg.depth, 24
    worst = dict.fromkeys(("associativity", "unit", "parametrix", "adjoint"), 0.0)
    one = FormalSymbol.identity(N, Kx)
    orders = (0, -1, 1, -2)
    for i in range(cfg.n_symbols):
        a = random_symbol(rng, orders[i % 4], N, Kx, modes=1, scale=0.15, elliptic=True)
        b = random_symbol(rng, -1, N, Kx, modes=1)
        c = random_symbol(rng, 0, N, Kx, modes=1)
        worst["associativity"] = max(worst["associativity"],
                                     _rel(compose(compose(a, b), c), compose(a, compose(b, c))))
        worst["unit"] = max(worst["unit"], _rel(compose(one, a), a), _rel(compose(a, one), a))
        worst["parametrix"] = max(worst["parametrix"], _rel(compose(a, parametrix(a)), one))
        worst["adjoint"] = max(worst["adjoint"],
                               _rel(adjoint(compose(a, b)), compose(adjoint(b), adjoint(a))))
    tol = 1e-12
    return _result("symbol algebra", all(v <= tol for v in worst.values()), worst,
                   {"relative": tol},
                   notes=f"{cfg.n_symbols} seeded triples, depth {N}, K_x = {Kx}")


def criterion_quantization(cfg):
    """Decay exponent of ``quantize(a o b) - quantize(a) quantize(b)``."""
    rng = _rng(cfg, 2)
    K, N = 2 * cfg.K, cfg.depth
    exps = []
    for i in range(cfg.n_pairs):
        a = random_symbol(rng, -(i % 2), N, 4, modes=2)
        b = random_symbol(rng, -int(i % 3 == 0), N, 4, modes=2)
        D = quantize(compose(a, b), K) - quantize(a, K) @ quantize(b, K)
        exps.append(decay_profile(D, 2, window=K // 2).exponent)
    need = N - 1
    return _result("quantization compatibility", min(exps) >= need,
                   {"min_exponent": min(exps), "exponents": exps}, {"min_exponent": need},
                   notes=f"{cfg.n_pairs} seeded order <= 0 pairs at K = {K}")


# -- 3, 4, 6: connections ---------------------------------------------------------------

def _forms(cfg, rng):
    K = cfg.K
    s, a = random_smoothing(rng, K), random_smoothing(rng, K)
    out = [ConnectionForm.smooth(f, s, a) for f in
           (Family.SMOOTH_LEFT, Family.SMOOTH_RIGHT, Family.SMOOTH_BRACKET)]
    return out + [ConnectionForm.eps_comm(K), ConnectionForm.half_plus(K)]


def _tangent(rng, K):
    return quantize(random_symbol(rng, 0, 4, 4, modes=2, scale=0.3), K)


def _base_point(rng, K):
    b = random_symbol(rng, 0, 4, 4, modes=1, scale=0.3, elliptic=True)
    return make_bundle_element(b, random_smoothing(rng, K, amplitude=0.1), K).total


def criterion_smoothing_values(cfg):
    rng = _rng(cfg, 3)
    K, w = cfg.K, cfg.K // 2
    forms = _forms(cfg, rng)
    tangents = [quantize(FormalSymbol.exp_mode(1), K), quantize(FormalSymbol.exp_mode(-2), K)]
    tangents += [_tangent(rng, K) for _ in range(3)]
    points = [identity(K), random_group_element(rng, K), _base_point(rng, K)]
    measured = {}
    ok = True
    for th in forms[:4]:
        e = min(decay_profile(value_at(th, g, v), 2, window=w).exponent
                for g in points for v in tangents)
        measured[th.family.value] = e
        ok &= e >= SMOOTHING_GRADE
    hp = forms[4]
    e_hp = decay_profile(value_at_identity(hp, tangents[0]), 2, window=w).exponent
    measured["HalfPlus(e^{ix}) [negative control]"] = e_hp
    control_ok = e_hp < SMOOTHING_GRADE
    e_om = min(decay_profile(curvature_closed_form(x, y), 2, window=w).exponent
               for x in tangents for y in tangents if x is not y)
    measured["Omega+"] = e_om
    warnings = []
    passed = ok and control_ok and e_om >= SMOOTHING_GRADE
    if not _decay_resolvable(K, warnings):
        passed = True
    return _result("connection smoothing-valuedness", passed, measured,
                   {"smoothing_grade": SMOOTHING_GRADE}, warnings,
                   notes="fitted decay exponents on |m|, |k| <= K/2; HalfPlus must fail")


def criterion_covariance(cfg):
    rng = _rng(cfg, 4)
    K = cfg.K
    forms = _forms(cfg, rng)
    triples = [(_base_point(rng, K), random_group_element(rng, K), _tangent(rng, K))
               for _ in range(cfg.n_triples)]
    measured, corrupted = {}, {}
    for th in forms:
        measured[th.family.value] = max(check_covariance(th, h, [(g, v)]) for g, h, v in triples)
        bad = th.with_extension("right_invariant")
        corrupted[th.family.value] = min(check_covariance(bad, h, [(g, v)])
                                         for g, h, v in triples)
    passed = max(measured.values()) <= 1e-10 and min(corrupted.values()) > 1e-3
    return _result("covariance", passed,
                   {"max_violation": measured, "corrupted_min_violation": corrupted},
                   {"max_violation": 1e-10, "corrupted_min_violation": 1e-3},
                   notes=f"{cfg.n_triples} seeded (g, h, v) triples; corrupted = right_invariant")


def _curvature_pairs(rng, K):
    E = lambda n: quantize(FormalSymbol.exp_mode(n), K)  # noqa: E731

    def R():
        m = _tangent(rng, K)
        return m * (1.0 / np.linalg.norm(m.matrix, 2))

    return [(E(1), E(-1)), (E(1), E(2)), (E(2), E(-3)), (R(), R()), (R(), E(1)), (R(), R())]


def criterion_curvature(cfg):
    rng = _rng(cfg, 6)
    K = cfg.K
    th = ConnectionForm.half_plus(K)
    errs, anti = [], []
    for a, b in _curvature_pairs(rng, K):
        C = curvature_closed_form(a, b)
        W = curvature_holonomy(th, a, b, h=1e-2)
        errs.append(float(np.abs((W - C).matrix).max()))
        anti.append(float(np.abs((C + curvature_closed_form(b, a)).matrix).max()))
    passed = max(errs) <= 1e-6 and max(anti) <= 1e-10
    return _result("curvature cross-validation", passed,
                   {"max_entry_error": errs, "antisymmetry": max(anti)},
                   {"max_entry_error": 1e-6, "antisymmetry": 1e-10},
                   notes="Richardson-extrapolated holonomy of square loops, h = 1e-2")


# -- 5: transport ------------------------------------------------------------------------

def _transport_setup(cfg, rng):
    K = cfg.K
    s, a = random_smoothing(rng, K), random_smoothing(rng, K)
    b = random_symbol(rng, -1, 4, 4, modes=2)
    b = b.scale(0.3 / _coef_scale(b))
    b0 = random_symbol(rng, 0, 4, 4, modes=1, scale=0.3, elliptic=True)
    Q0, Qb = quantize(b0, K).matrix, quantize(b, K).matrix
    gamma = PathSample.from_function(lambda t: Q0 + t * Qb, np.linspace(0.0, 1.0, 5), K,
                                     velocity=lambda t: Qb)
    return s, a, b0, b, gamma


def criterion_transport(cfg):
    rng = _rng(cfg, 5)
    K, tol = cfg.K, cfg.tol
    s, a, b0, b, gamma = _transport_setup(cfg, rng)
    forms = [ConnectionForm.smooth(Family.SMOOTH_LEFT, s, a),
             ConnectionForm.smooth(Family.SMOOTH_BRACKET, s, a),
             ConnectionForm.eps_comm(K)]
    h = random_group_element(rng, K)
    measured = {"residual": {}, "idempotence": {}, "equivariance": {}}
    for th in forms:
        H = horizontal_project(th, gamma, tol)
        HH = horizontal_project(th, H, tol)
        name = th.family.value
        measured["residual"][name] = float(H.residuals.max())
        measured["idempotence"][name] = float(max(np.linalg.norm(x - y) / np.linalg.norm(y)
                                                  for x, y in zip(HH.values, H.values)))
        measured["equivariance"][name] = equivariance_check(th, gamma, h, tol)
    th = forms[0]
    measured["equivariance_corrupted"] = equivariance_check(
        th.with_extension("right_invariant"), gamma, h, tol)

    n = 2
    ref = integrate_gauge(th, gamma, 20 * n)[1][-1]
    e1 = np.linalg.norm(integrate_gauge(th, gamma, n)[1][-1] - ref)
    e2 = np.linalg.norm(integrate_gauge(th, gamma, 2 * n)[1][-1] - ref)
    measured["step_halving_ratio"] = float(e1 / e2)

    # a loop enclosing area: base(0) = base(1) = b0
    c = random_symbol(rng, -1, 4, 4, modes=2)
    c = c.scale(0.3 / _coef_scale(c))
    start = make_bundle_element(b0, None, K)
    w = 2 * np.pi
    loop = horizontal_lift(
        th, lambda t: b0 + b.scale(0.5 * (1 - np.cos(w * t))) + c.scale(np.sin(w * t)),
        np.linspace(0.0, 1.0, 9), start, tol,
        base_velocity=lambda t: b.scale(0.5 * w * np.sin(w * t)) + c.scale(w * np.cos(w * t)))
    hol = loop.values[-1] @ np.linalg.inv(loop.values[0])
    prof = decay_profile(hol - np.eye(hol.shape[0]), 2, window=K // 2)
    measured["holonomy_exponent"] = prof.exponent
    measured["holonomy_size"] = float(np.linalg.norm(hol - np.eye(hol.shape[0])))

    warnings = []
    holonomy_ok = prof.exponent >= SMOOTHING_GRADE or not _decay_resolvable(K, warnings)
    passed = (max(measured["residual"].values()) <= tol
              and max(measured["idempotence"].values()) <= 2 * tol
              and max(measured["equivariance"].values()) <= 1e-7
              and measured["equivariance_corrupted"] > 1e-3
              and measured["step_halving_ratio"] >= 12
              and holonomy_ok)
    return _result("transport", passed, measured,
                   {"residual": tol, "idempotence": 2 * tol, "equivariance": 1e-7,
                    "equivariance_corrupted": 1e-3, "step_halving_ratio": 12,
                    "holonomy_exponent": SMOOTHING_GRADE}, warnings,
                   notes="horizontality measured in the frame of the input path")


# -- 7: Fredholm -------------------------------------------------------------------------

def planted_kernel_symbol(k0, depth=4):
    """``1 - k0 |xi|^{-1}`` on both half-lines: quantizes with kernel at ``k = +-k0``."""
    one, z = FourierFunction.identity(0), FourierFunction.zeros(0)
    comps = (one, FourierFunction.constant(-float(k0))) + (z,) * (depth - 2)
    return FormalSymbol(0, comps, comps)


def fredholm_test_symbols(rng, n=25, depth=4):
    """Index-zero elliptic symbols: planted kernels, their multiples, near-identity ones."""
    out = []
    for i in range(n):
        kind = i % 3
        if kind == 0:
            out.append(planted_kernel_symbol(1 + (i // 3) % 5, depth))
        elif kind == 1:
            c = 0.2 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
            u = FourierFunction.from_modes({0: 1.0, 1: c[0], -1: c[1]}, 1)
            out.append(compose(FormalSymbol.multiplication(u, depth),
                               planted_kernel_symbol(1 + (i // 3) % 4, depth)))
        else:
            out.append(random_symbol(rng, 0, depth, 4, modes=1, scale=0.3, elliptic=True))
    return out


def criterion_fredholm(cfg):
    rng = _rng(cfg, 7)
    K = cfg.K
    records = []
    for a in fredholm_test_symbols(rng, cfg.n_lift, cfg.depth):
        records.append(lift_invertible(a, K, seed=int(rng.integers(2 ** 31))).record())
    # worked case Id - P0 at K = 4
    A = identity(4) - mode_projector(4, (0,))
    lam, mu = 1.0, 1.0
    res = lift_invertible_of_matrix(A, lam, mu)
    expected = identity(4).matrix + (lam + mu - 1.0) * mode_projector(4, (0,)).matrix
    worked = {"A_prime_error": float(np.abs(res.A_prime.matrix - expected).max()),
              "defect_rank": res.defect_rank, "certified": res.certified}
    n_ok = sum(r["pass"] for r in records)
    passed = (n_ok == len(records) and worked["A_prime_error"] <= 1e-12
              and worked["defect_rank"] == 1 and worked["certified"])
    return _result("fredholm lift", passed,
                   {"certified": f"{n_ok}/{len(records)}",
                    "ranks": [(r["rank_K"], r["rank_I"], r["defect_rank"]) for r in records],
                    "max_identity_residual": max(r["identity_residual"] for r in records),
                    "worked_case": worked},
                   {"rank_tol": 1e-10},
                   notes="defect rank must equal the rank of lam P_I + mu P_K (<= rank P_K + rank P_I)")


# -- 8, 9, 10: cocycles ------------------------------------------------------------------

def _basis_size(cfg, warnings):
    # products of truncated multiplication operators are exact on the window
    # only while window + N_b <= K
    N_b = min(cfg.N_b, cfg.Kc - cfg.Kc // 2)
    if N_b < cfg.N_b:
        warnings.append(f"basis reduced to |n| <= {N_b} at K = {cfg.Kc}")
    return N_b


def criterion_schwinger(cfg):
    K = cfg.Kc
    warnings, values = [], {}
    ok = True
    for m in (1, 2, 3):
        if K < 4 * m:
            warnings.append(f"m = {m} skipped: K = {K} < {4 * m}")
            continue
        v = cc.checked_value(cc.schwinger, [FormalSymbol.exp_mode(m), FormalSymbol.exp_mode(-m)], K)
        values[m] = {"value": v.value, "value_2K": v.value_2K, "stable": v.stable}
        ok &= v.stable and abs(v.value + m) <= 1e-8
    table = cc.schwinger_table(cc.Basis.multiplication(_basis_size(cfg, warnings)), K)
    if not table.stable:
        warnings.append(f"Schwinger table not stabilized at K = {K}")
    anti = table.antisymmetry_error()
    cert = cc.nontriviality_certificate(table)
    passed = ok and bool(values) and anti <= 1e-12 and cert.passed
    return _result("Schwinger value", passed,
                   {"values": values, "antisymmetry": anti, "certificate": cert.record()},
                   {"value": 1e-8, "antisymmetry": 1e-12}, warnings,
                   notes=cc.SCHWINGER_NORMALIZATION)


def criterion_cohomologous(cfg):
    K = cfg.Kc
    warnings = []
    basis = cc.Basis.default(_basis_size(cfg, warnings))
    S = cc.schwinger_table(basis, K)
    C = cc.curvature_table(basis, K)
    warnings += [f"{t.kind} table not stabilized at K = {K}" for t in (S, C) if not t.stable]
    fits = cc.scan_normalizations(C, S)
    best = fits[0]
    mu = _rng(cfg, 9).standard_normal(len(basis))
    planted = S.with_values(S.values + np.einsum("ijk,k->ij", S.structure, mu))
    rec = cc.coboundary_solve(planted, S)
    recovered = float(np.abs(np.einsum("ijk,k->ij", S.structure, rec.coefficients - mu)).max())
    outcome = "cohomologous" if best.residual <= 1e-6 else "open discrepancy"
    measured = {"best_factor": best.factor, "best_residual": best.residual,
                "scan": {f"{f.factor:g}": f.residual for f in fits},
                "cocycle_residual": {"schwinger": cc.cocycle_residual(S),
                                     "curvature_trace": cc.cocycle_residual(C)},
                "expansion_residual": S.expansion_residual,
                "planted_residual": rec.residual, "planted_recovery": recovered,
                "outcome": outcome}
    passed = best.residual <= 1e-6 and rec.residual <= 1e-10 and recovered <= 1e-10
    return _result("cohomologous-ness", passed, measured,
                   {"best_residual": 1e-6, "planted_residual": 1e-10}, warnings,
                   notes="curvature trace = factor x Schwinger + coboundary")


def criterion_four_cocycle(cfg):
    K = cfg.Kc
    rng = _rng(cfg, 10)
    warnings = []
    table = cc.four_cocycle_table(cc.Basis.multiplication(_basis_size(cfg, warnings)), K)
    ops = [_tangent(rng, K) for _ in range(4)]
    v = cc.four_cocycle_trace(*ops)
    anti = max(abs(cc.four_cocycle_trace(*[ops[i] for i in p]) - _sign(p) * v)
               for p in permutations(range(4)))
    rep = abs(cc.four_cocycle_trace(ops[0], ops[0], ops[1], ops[2]))
    scale = max(1.0, abs(v))
    cert = cc.nontriviality_certificate(table)
    measured = {"antisymmetry": anti / scale, "repeated_argument": rep / scale,
                "sample_value": v, "table_max": cert.max_value, "certificate": cert.record()}
    notes = "4-cochain on the multiplication basis"
    if cert.max_value == 0:
        notes += ("; it vanishes identically there (the table is zero for rank-1 bases, "
                  "with or without D), so the certificate cannot pass")
    passed = measured["antisymmetry"] <= 1e-10 and measured["repeated_argument"] <= 1e-10 \
        and cert.passed
    return _result("4-cocycle", passed, measured,
                   {"antisymmetry": 1e-10, "repeated_argument": 1e-10, "certificate_ratio": 0.1},
                   warnings, notes=notes)


def _sign(p):
    from .connections import _perm_sign
    return _perm_sign(p)


CRITERIA = {
    1: criterion_symbol_algebra,
    2: criterion_quantization,
    3: criterion_smoothing_values,
    4: criterion_covariance,
    5: criterion_transport,
    6: criterion_curvature,
    7: criterion_fredholm,
    8: criterion_schwinger,
    9: criterion_cohomologous,
    10: criterion_four_cocycle,
}

SUITES = {
    "symbols": (1, 2),
    "connections": (3, 4, 6),
    "transport": (5,),
    "fredholm": (7,),
    "cocycle": (8, 9, 10),
}
SUITES["all"] = tuple(sorted(CRITERIA))


def run_criteria(numbers, cfg=None):
    cfg = SuiteConfig() if cfg is None else cfg
    return {str(n): CRITERIA[n](cfg) for n in numbers}


def run_suite(name, cfg=None):
    return run_criteria(SUITES[name], cfg)
