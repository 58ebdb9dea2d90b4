"""Kernel backend selection.

The compiled extension is used when it was built and ``VPGRID_PURE_PYTHON``
is unset; otherwise the numpy fallback is loaded.  ``BACKEND`` names the
active implementation.
"""

import os

from . import _fallback

if os.environ.get("VPGRID_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

hough_accumulate = _impl.hough_accumulate
im2col = _impl.im2col
col2im = _impl.col2im
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
