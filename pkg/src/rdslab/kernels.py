"""Backend selection for the hot loops.

The compiled extension ``rdslab._ckernels`` is used when it imports; the
pure-Python mirror ``rdslab._pykernels`` otherwise. Set
``RDSLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from rdslab import _pykernels

if os.environ.get("RDSLAB_PURE_PYTHON", "") == "1":
    backend = _pykernels
else:
    try:
        from rdslab import _ckernels as backend
    except ImportError:  # extension not built
        backend = _pykernels

BACKEND = backend.BACKEND
GRAZING = backend.GRAZING
SHAPE_POLAR = backend.SHAPE_POLAR
SHAPE_ELLIPSE = backend.SHAPE_ELLIPSE

BilliardKernel = backend.BilliardKernel
KickKernel = backend.KickKernel
accumulate = backend.accumulate
orbit = backend.orbit
projective_chain = backend.projective_chain


def is_native(kernel) -> bool:
    """True when ``kernel`` can be driven by the selected backend's loops."""
    return isinstance(kernel, backend.StepKernel)


def drivers_for(kernel):
    """Driver module able to run ``kernel`` (compiled loops need compiled kernels)."""
    return backend if is_native(kernel) else _pykernels
