"""The curvature-squared 4-cochain: zero at rank 1, nonzero for matrix loops.

Run with ``python3 demos/four_cocycle_rank_two.py``.
"""
import itertools

import numpy as np

from pdobundle import cocycle as cc
from pdobundle.operators import quantize
from pdobundle.symbols import FormalSymbol, FourierFunction

t = cc.four_cocycle_table(cc.Basis.default(4), 32)
print(f"rank 1, basis {len(t.labels)} elements: max |value| = {np.abs(t.values).max()}")

K, r = 8, 2


def loop(n, i, j):
    c = np.zeros((2 * abs(n) + 1, r, r), dtype=complex)
    c[n + abs(n), i, j] = 1
    return FormalSymbol.multiplication(FourierFunction(c), 2)


gens = [(n, i, j) for n in (-1, 0, 1) for i in range(r) for j in range(r)]
ops = {g: quantize(loop(*g), K) for g in gens}
nonzero = [(q, cc.four_cocycle_trace(*[ops[g] for g in q]))
           for q in itertools.combinations(gens, 4)]
nonzero = [(q, v) for q, v in nonzero if abs(v) > 1e-9]
print(f"rank 2, loops e^{{inx}} E_ij with |n| <= 1: {len(nonzero)} of "
      f"{sum(1 for _ in itertools.combinations(gens, 4))} quadruples nonzero")
for q, v in nonzero[:5]:
    print("  ", " ".join(f"e^{{{n}ix}}E{i}{j}" for n, i, j in q), "->", f"{v.real:+.1f}")
