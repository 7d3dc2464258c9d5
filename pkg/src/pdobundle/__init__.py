"""Truncated models of pseudo-differential operator bundles on the circle.

Formal classical symbols (:mod:`~pdobundle.symbols`), their Fourier
quantization to finite matrices (:mod:`~pdobundle.operators`), smoothing
valued connections and curvature (:mod:`~pdobundle.connections`),
horizontal transport (:mod:`~pdobundle.transport`), finite-rank Fredholm
corrections (:mod:`~pdobundle.fredholm`) and Lie-algebra cochains
(:mod:`~pdobundle.cocycle`).
"""
from .symbols import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .connections import *  # noqa: F401,F403
from .transport import *  # noqa: F401,F403
from .fredholm import *  # noqa: F401,F403
from .cocycle import *  # noqa: F401,F403

# both modules define ``adjoint``; the package-level name is the symbol one
from .symbols import adjoint  # noqa: E402,F811
from .operators import adjoint as operator_adjoint  # noqa: E402,F401

__version__ = "0.1.0"
