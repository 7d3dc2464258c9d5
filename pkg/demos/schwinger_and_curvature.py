"""Schwinger values, the curvature trace, and the cohomology comparison.

Run with ``python3 demos/schwinger_and_curvature.py``.
"""
import numpy as np

from pdobundle import cocycle as cc
from pdobundle.symbols import FormalSymbol

K = 32

print("c_S(e^{imx}, e^{-imx}) and its value at 2K:")
for m in (1, 2, 3):
    v = cc.checked_value(cc.schwinger, [FormalSymbol.exp_mode(m), FormalSymbol.exp_mode(-m)], K)
    print(f"  m = {m}:  {v.value.real:+.12f}  (2K: {v.value_2K.real:+.12f}, stable={v.stable})")

basis = cc.Basis.default(6)
S = cc.schwinger_table(basis, K)
C = cc.curvature_table(basis, K)
print(f"\nbasis: {', '.join(basis.labels)}")
print(f"cocycle residuals: Schwinger {cc.cocycle_residual(S):.1e}, "
      f"curvature trace {cc.cocycle_residual(C):.1e}")
print("\nnormalization scan (curvature trace vs factor x Schwinger):")
for fit in cc.scan_normalizations(C, S):
    print(f"  factor {fit.factor:+5.2f}: relative residual {fit.residual:.3e}")
cert = cc.nontriviality_certificate(cc.schwinger_table(cc.Basis.multiplication(6), K))
print(f"\nnon-triviality certificate on multiplications: {cert.record()}")
print(f"largest |c_S| on the default basis: {np.abs(S.values).max():.1f}")
