"""Stencil kernel backend selection.

Prefers the compiled Cython kernels and falls back to the vectorized NumPy
implementation when the extension is unavailable. Override with the
environment variable ``MGSR_BACKEND`` set to ``cython`` or ``numpy``
(``auto`` is the default).
"""

from __future__ import annotations

import os

from . import numpy_backend

__all__ = ["active_backend", "gs_sweeps", "laplacian", "HAVE_CYTHON"]

try:
    from . import _stencil as _cython_backend

    HAVE_CYTHON = True
except ImportError:  # extension not built; pure-Python install still works
    _cython_backend = None
    HAVE_CYTHON = False

_choice = os.environ.get("MGSR_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "numpy"):
    raise ValueError(
        f"MGSR_BACKEND must be auto, cython, or numpy, got {_choice!r}"
    )
if _choice == "cython" and not HAVE_CYTHON:
    raise ImportError(
        "MGSR_BACKEND=cython but the compiled kernels are not installed"
    )

if _choice == "numpy" or not HAVE_CYTHON:
    _impl = numpy_backend
    _name = "numpy"
else:
    _impl = _cython_backend
    _name = "cython"


def active_backend() -> str:
    """Name of the backend in use: ``cython`` or ``numpy``."""
    return _name


gs_sweeps = _impl.gs_sweeps
laplacian = _impl.laplacian
