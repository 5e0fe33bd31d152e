"""Kernel selection at import time.

Set ``SUBCALC_PURE_PYTHON=1`` to force the NumPy fallback even when the
compiled extension is available.
"""

import os

from . import _pure

if os.environ.get("SUBCALC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"

lubich_recurrence = _impl.lubich_recurrence
lower_toeplitz_matvec = _impl.lower_toeplitz_matvec
lower_toeplitz_solve = _impl.lower_toeplitz_solve

__all__ = [
    "BACKEND",
    "lubich_recurrence",
    "lower_toeplitz_matvec",
    "lower_toeplitz_solve",
]
