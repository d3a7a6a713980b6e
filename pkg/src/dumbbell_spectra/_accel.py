"""JIT switch for the numeric kernels.

Kernels in this package are written once in plain numpy-compatible Python and
compiled with ``numba.njit`` when numba is importable.  Setting the environment
variable ``DBSPEC_NO_NUMBA=1`` before import runs the same code uncompiled,
which is slow but useful for debugging and for the benchmark baseline.
"""

import os

_DISABLED = os.environ.get("DBSPEC_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def jit(func=None, **options):
    """``numba.njit`` with caching, or the identity when numba is off."""
    if not HAVE_NUMBA:
        if func is None:
            return lambda f: f
        return func
    options.setdefault("cache", True)
    options.setdefault("nogil", True)
    if func is None:
        return numba.njit(**options)
    return numba.njit(**options)(func)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "python"
