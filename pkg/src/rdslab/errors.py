"""Exception hierarchy shared by every module, including the compiled kernels."""


class RdsLabError(Exception):
    """Base class for all errors raised by rdslab."""


class NonConvexSpec(RdsLabError, ValueError):
    """A table spec produces a boundary with non-positive geodesic curvature."""


class UnsupportedCombination(RdsLabError, ValueError):
    """A table spec is not available on the requested surface."""


class RootFindFailure(RdsLabError, RuntimeError):
    """The next-collision solver did not converge."""


class DegenerateAngle(RdsLabError, ArithmeticError):
    """An outgoing angle collapsed to the boundary for an interior state."""


class NonFiniteAccumulator(RdsLabError, FloatingPointError):
    """The cocycle product overflowed between two renormalizations."""


class SingularMatrix(RdsLabError, ArithmeticError):
    """A matrix acting on the projective line is not invertible."""


class InsufficientSamples(RdsLabError, ValueError):
    """Too few samples for the requested statistical test."""


class ConfigError(RdsLabError, ValueError):
    """Invalid experiment configuration. The message names the offending key."""
