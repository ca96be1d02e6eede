"""Numba/numpy backend selection.

Hot kernels are written once in a numba-compatible style and compiled with
``@njit`` when numba is importable. Setting the environment variable
``NEGDELAY_NO_NUMBA=1`` (before import) forces the pure-numpy fallback:
``njit`` then degrades to a no-op decorator and the vectorized numpy
implementations take over where a plain-python loop would be too slow.

The two paths consume identical random draws and agree to ~1e-12 relative
(floating-point accumulation order may differ in the last bits), so the
active backend is recorded in every output file header.
"""

import os

USE_NUMBA = os.environ.get("NEGDELAY_NO_NUMBA", "0") != "1"

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit under the fallback backend."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
