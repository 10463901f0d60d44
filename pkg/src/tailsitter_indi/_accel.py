"""Numba switch for the hot kernels.

Set ``TAILSITTER_INDI_NUMBA=0`` before import to run every kernel as plain
Python/numpy. The jitted dispatchers keep the original function reachable
through ``.py_func`` so both paths can be compared in one process.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("TAILSITTER_INDI_NUMBA", "1").strip().lower()
NUMBA_ENABLED = numba is not None and _flag not in ("0", "false", "no", "off")


def njit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def python_impl(fn):
    """Return the uncompiled implementation behind a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
