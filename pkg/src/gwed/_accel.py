"""Backend selection for the compiled kernels.

Set ``GWED_DISABLE_NUMBA=1`` in the environment before import to force the
pure-numpy code path even when numba is installed.
"""
import os

_FLAG = os.environ.get("GWED_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    The loop kernels stay importable (and testable as plain Python) on
    machines without numba.
    """
    if _numba is None:
        return func
    return _numba.njit(cache=True, fastmath=False)(func)
