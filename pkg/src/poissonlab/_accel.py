"""Switch between numba-compiled kernels and their pure-numpy twins.

Set ``POISSONLAB_PURE_NUMPY=1`` before import to force the numpy paths.
Both paths are always importable so tests and benchmarks can compare them.
"""
import logging
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("POISSONLAB_PURE_NUMPY", "").strip().lower()
USE_NUMBA = numba is not None and _flag not in ("1", "true", "yes", "on")

if numba is not None:
    logging.getLogger("numba").setLevel(logging.WARNING)


def njit(*args, **kwargs):
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda func: func
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
