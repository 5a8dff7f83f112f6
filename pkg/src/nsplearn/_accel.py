"""Selects jitted or pure-numpy kernels.

Set ``NSPLEARN_NUMBA=0`` in the environment before import to force the
numpy path. Both paths are always importable so they can be compared.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("NSPLEARN_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _flag not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise."""
    if numba is None:  # pragma: no cover
        return func
    return numba.njit(cache=True)(func)


def pick(jitted, plain):
    return jitted if USE_NUMBA else plain
