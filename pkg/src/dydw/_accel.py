"""Numba switch.

Kernels are written once in numba-compatible Python.  ``njit`` compiles them
unless the environment variable ``DYDW_NUMBA`` is set to ``0``, in which case
they run as plain Python on numpy scalars (slow, but bit-identical).
"""

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("DYDW_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if NUMBA_ENABLED:
    import numba

    def njit(func):
        return numba.njit(func, cache=True, nogil=True)

else:

    def njit(func):
        return func


class quiet_overflow:
    """Silence wrap-around warnings from uint64 scalar arithmetic in fallback mode."""

    def __enter__(self):
        self._ctx = np.errstate(over="ignore")
        self._ctx.__enter__()
        return self

    def __exit__(self, *exc):
        return self._ctx.__exit__(*exc)
