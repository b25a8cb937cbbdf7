"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the numpy
implementations take over with identical semantics.  SBMLIB_FORCE_PY=1
forces the fallback (used by the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SBMLIB_FORCE_PY"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"


def backend_name() -> str:
    return BACKEND


def get_backends() -> dict:
    """Both backends when available, for benchmarking and cross-checks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
