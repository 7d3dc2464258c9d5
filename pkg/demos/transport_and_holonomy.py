"""Horizontal projection of a path, and the holonomy of a loop of symbols.

Run with ``python3 demos/transport_and_holonomy.py``.
"""
import numpy as np

from pdobundle.connections import ConnectionForm, Family, curvature_closed_form, curvature_holonomy
from pdobundle.operators import decay_profile, make_bundle_element, quantize, random_smoothing
from pdobundle.symbols import FormalSymbol, random_symbol
from pdobundle.transport import PathSample, horizontal_lift, horizontal_project

K = 16
rng = np.random.default_rng(0)
s, a = random_smoothing(rng, K), random_smoothing(rng, K)
theta = ConnectionForm.smooth(Family.SMOOTH_LEFT, s, a)

b0 = random_symbol(rng, 0, 4, 4, modes=1, scale=0.3, elliptic=True)
b = random_symbol(rng, -1, 4, 4, modes=2)
b = b.scale(0.3 / max(1.0, max(np.abs(f.coeffs).max() for f in b.plus + b.minus)))
Q0, Qb = quantize(b0, K).matrix, quantize(b, K).matrix
gamma = PathSample.from_function(lambda t: Q0 + t * Qb, np.linspace(0, 1, 5), K,
                                 velocity=lambda t: Qb)
H = horizontal_project(theta, gamma)
print(f"straight path: {H.substeps} RK4 steps per interval, "
      f"max horizontality residual {H.residuals.max():.2e}")

c = random_symbol(rng, -1, 4, 4, modes=2)
c = c.scale(0.3 / max(1.0, max(np.abs(f.coeffs).max() for f in c.plus + c.minus)))
w = 2 * np.pi
loop = horizontal_lift(
    theta, lambda t: b0 + b.scale(0.5 * (1 - np.cos(w * t))) + c.scale(np.sin(w * t)),
    np.linspace(0, 1, 9), make_bundle_element(b0, None, K),
    base_velocity=lambda t: b.scale(0.5 * w * np.sin(w * t)) + c.scale(w * np.cos(w * t)))
hol = loop.values[-1] @ np.linalg.inv(loop.values[0])
D = hol - np.eye(hol.shape[0])
print(f"loop holonomy: |hol - Id| = {np.linalg.norm(D):.3e}, "
      f"fitted decay exponent {decay_profile(D, 2, window=K // 2).exponent:.1f}")

Kc = 6
x, y = quantize(FormalSymbol.exp_mode(1), Kc), quantize(FormalSymbol.exp_mode(-1), Kc)
W = curvature_holonomy(ConnectionForm.half_plus(Kc), x, y)
print(f"HalfPlus curvature on (e^{{ix}}, e^{{-ix}}): holonomy vs closed form, "
      f"max entry error {np.abs((W - curvature_closed_form(x, y)).matrix).max():.1e}")
