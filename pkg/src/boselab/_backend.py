"""Kernel backend selection: compiled extension if importable, numpy otherwise.

Set BOSELAB_PURE_PYTHON=1 to force the numpy path (used by the benchmark and
the backend-parity tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("BOSELAB_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
spectra_from_thetas = _impl.spectra_from_thetas


def available_backends():
    """Name -> kernel module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_cy
        out["cython"] = _kernels_cy
    except ImportError:
        pass
    return out
