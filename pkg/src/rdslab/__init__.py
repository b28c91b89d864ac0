"""Lyapunov exponents of randomly perturbed billiards and toral maps.

Modules: :mod:`geometry` (surfaces and tables), :mod:`billiard` (collision
map and its derivative), :mod:`toralmaps` (standard map family),
:mod:`noise`, :mod:`rds` (random orbits and exponents), :mod:`projective`
(P^1 action, stationary measures, classifier), :mod:`equidist` and the
:mod:`cli` experiment runner.
"""
from rdslab.errors import (ConfigError, DegenerateAngle, InsufficientSamples,
                           NonConvexSpec, NonFiniteAccumulator, RdsLabError,
                           RootFindFailure, SingularMatrix, UnsupportedCombination)
from rdslab.kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "DegenerateAngle", "InsufficientSamples", "NonConvexSpec",
    "NonFiniteAccumulator", "RdsLabError", "RootFindFailure", "SingularMatrix",
    "UnsupportedCombination", "__version__",
]
