"""Optional numba acceleration.

Set ``CRNOMA_DISABLE_NUMBA=1`` before import to run every kernel through its
pure numpy/scipy path instead.
"""
import os

_FLAG = os.environ.get("CRNOMA_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
