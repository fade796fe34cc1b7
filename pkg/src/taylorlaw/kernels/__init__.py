"""Sampling kernels with a compiled fast path and a NumPy fallback.

The compiled Cython extension (``taylorlaw.kernels._ckernels``) is selected
at import time when present; otherwise the pure NumPy backend is used.
Both implement the same counter-based stream (see :mod:`.stream`) and the
same portable arithmetic, and produce bit-identical output, so the choice
only affects speed.  ``set_backend`` allows explicit selection, which the
benchmark and the cross-backend tests use.
"""

from __future__ import annotations

from . import numpy_backend, stream

try:
    from . import _ckernels as cython_backend

    HAVE_CYTHON = True
except ImportError:  # extension not built; NumPy lane still works
    cython_backend = None
    HAVE_CYTHON = False

_BACKENDS = {"numpy": numpy_backend}
if HAVE_CYTHON:
    _BACKENDS["cython"] = cython_backend

_active = _BACKENDS.get("cython", numpy_backend)

derive = stream.derive
mix64 = stream.mix64


def active_backend():
    """The backend module currently used by the samplers."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str):
    """Select a kernel backend by name ('numpy' or 'cython').

    Returns the previously active backend module.
    """
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous = _active
    _active = _BACKENDS[name]
    return previous
