"""Backend selection for the hot loops.

The compiled extension is preferred; set ``AECONV_PURE=1`` to force the numpy
fallback.  ``BACKEND`` names the one in use.
"""
from __future__ import annotations

import os

from . import _kernels_py

PHI_CODES = {"arctan": 0, "ratio1": 1, "ratio2": 2, "power": 3}

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("AECONV_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

window_moments = _impl.window_moments
running_lp_norms = _impl.running_lp_norms
dirichlet = _impl.dirichlet
convolve_dirichlet = _impl.convolve_dirichlet


def get_backend(name: str):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
