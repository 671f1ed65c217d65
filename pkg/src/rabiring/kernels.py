"""Backend selection for the minimizer kernels.

The compiled extension ``rabiring._kernels`` is used when importable.  Set
``RABI_RING_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _kernels_py

QRR = _kernels_py.QRR
LMGR = _kernels_py.LMGR


def _load(name=None):
    name = name or os.environ.get("RABI_RING_BACKEND", "auto").lower()
    if name not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name != "python":
        try:
            from . import _kernels
        except ImportError:
            if name == "compiled":
                raise
        else:
            return _kernels, "compiled"
    return _kernels_py, "python"


backend, BACKEND = _load()

excess_energy = backend.excess_energy
gradient = backend.gradient
hessian = backend.hessian
descend = backend.descend


def get_backend(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    return _load(name)[0]
