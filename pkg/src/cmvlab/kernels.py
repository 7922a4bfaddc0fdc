"""Backend selection for the transfer-matrix kernels.

The compiled extension ``cmvlab._kernels`` is used when it is importable;
otherwise the pure-Python reference ``cmvlab._kernels_py`` is used.  Setting
the environment variable ``CMVLAB_PURE=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CMVLAB_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

MODE_A = 0
MODE_M = 1
MODE_A_INV = 2
MODE_M_INV = 3

transfer_product = _impl.transfer_product
transfer_log_norms = _impl.transfer_log_norms

__all__ = [
    "BACKEND",
    "MODE_A",
    "MODE_M",
    "MODE_A_INV",
    "MODE_M_INV",
    "transfer_product",
    "transfer_log_norms",
]
