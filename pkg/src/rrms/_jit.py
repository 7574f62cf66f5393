"""JIT shim: compile hot kernels with numba when available and wanted.

Setting the environment variable ``RRMS_NO_JIT=1`` (before import) selects the
pure-Python fallback.  Kernels are written against plain floats and numpy
arrays only, so the fallback is the same function body interpreted by
CPython; results are bit-identical between the two backends.
"""

from __future__ import annotations

import functools
import os
import warnings

import numpy as np

_DISABLED = os.environ.get("RRMS_NO_JIT", "").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError("jit disabled by RRMS_NO_JIT")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _quiet(func):
    # counter-based RNG relies on uint64 wraparound; numpy scalars warn on it
    @functools.wraps(func)
    def wrapper(*args):
        with np.errstate(over="ignore"):
            return func(*args)

    return wrapper


if HAS_NUMBA:

    def jit(func):
        # nogil lets replication workers run kernels concurrently
        return _njit(cache=True, nogil=True)(func)

    def jit_inline(func):
        # per-call overhead dwarfs the body for the small helpers, so force
        # IR-level inlining into their callers
        return _njit(cache=True, nogil=True, inline="always")(func)

else:

    def jit(func):
        return _quiet(func)

    jit_inline = jit

    if not _DISABLED:
        warnings.warn(
            "numba is not importable; falling back to pure-Python kernels "
            "(orders of magnitude slower)",
            RuntimeWarning,
            stacklevel=2,
        )


def jit_enabled() -> bool:
    """True when kernels run under numba rather than the interpreter."""
    return HAS_NUMBA


def py_func(func):
    """Uncompiled body of a jitted function (the function itself if no jit)."""
    inner = getattr(func, "py_func", None)
    if inner is None:
        return func
    return _quiet(inner)
