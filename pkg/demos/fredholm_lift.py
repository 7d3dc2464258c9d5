"""Finite-rank lifts of elliptic operators with planted kernels.

Run with ``python3 demos/fredholm_lift.py``.
"""
import json

import numpy as np

from pdobundle.fredholm import lift_invertible, lift_invertible_of_matrix
from pdobundle.operators import identity, mode_projector
from pdobundle.verify import planted_kernel_symbol

res = lift_invertible_of_matrix(identity(4) - mode_projector(4), lam=0.7, mu=1.9)
print("Id - P0 at K = 4: A' - Id on the zero mode =",
      res.A_prime.matrix[4, 4] - 1, "(expected lam + mu - 1 = 1.6)")

for k0 in (1, 2, 3):
    r = lift_invertible(planted_kernel_symbol(k0), 16)
    rec = r.record()
    print(f"kernel at k = +-{k0}: rank_K={rec['rank_K']} rank_I={rec['rank_I']} "
          f"defect rank={rec['defect_rank']} cond={rec['condition']:.1f} pass={rec['pass']}")

print(json.dumps({k: v for k, v in rec.items() if k != "defect"}, indent=1, default=str))
