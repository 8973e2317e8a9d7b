"""Backend selection for the hot kernels.

Set ``ISOFBP_DISABLE_NUMBA=1`` to force the pure-numpy code paths. If numba is
not importable the numpy paths are used as well.
"""
import os

_DISABLED = os.environ.get("ISOFBP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


USE_NUMBA = HAVE_NUMBA


def backend():
    return "numba" if USE_NUMBA else "numpy"
