"""Selection between numba-compiled kernels and the pure-numpy path.

Set ``HOLOWIDTH_DISABLE_NUMBA=1`` before import to force the numpy fallback.
"""

import os

_FLAG = "HOLOWIDTH_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by " + _FLAG)
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both return the function untouched
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
