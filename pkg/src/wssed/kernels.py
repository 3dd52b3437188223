"""Backend selection for the frame-level kernels.

The compiled extension is used when it was built; otherwise, or when
``WSSED_PURE_PYTHON`` is set to a non-empty value other than ``0``, the numpy
fallback is used. ``BACKEND`` names the active one.
"""

import os

from . import _pykernels

_force_python = os.environ.get("WSSED_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

binary_median = _impl.binary_median
hysteresis = _impl.hysteresis
bridge_gaps = _impl.bridge_gaps
runs = _impl.runs

__all__ = ["BACKEND", "binary_median", "hysteresis", "bridge_gaps", "runs"]
