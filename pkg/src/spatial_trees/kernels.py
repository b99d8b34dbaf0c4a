"""Kernel backend selection.

The compiled Cython extension is used when it imports; otherwise the NumPy
fallback is used. Set ``SPATIAL_TREES_PURE=1`` to force the fallback.
``BACKEND`` names whichever was picked.
"""

import os

from . import _pykernels

try:
    if os.environ.get("SPATIAL_TREES_PURE", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
power_iteration = _impl.power_iteration
max_pair_sq = _impl.max_pair_sq


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
