"""Numba acceleration toggle.

The hot kernels in :mod:`latdyn._kernels` exist in two variants: a numba
``@njit`` implementation and a pure-numpy fallback.  Which one the library
binds to is decided once, at import time:

* set ``LATDYN_DISABLE_NUMBA=1`` (or ``true``/``yes``) to force the numpy
  path, e.g. for debugging or bit-for-bit audit runs;
* if numba is not importable the numpy path is used automatically.

``benchmarks/bench_kernels.py`` times both variants side by side.
"""

import os
import warnings


def _flag_disabled() -> bool:
    return os.environ.get("LATDYN_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _flag_disabled()

if not HAVE_NUMBA and not _flag_disabled():  # pragma: no cover
    warnings.warn(
        "numba is not installed; falling back to the pure-numpy kernels "
        "(set LATDYN_DISABLE_NUMBA=1 to silence this warning)"
    )


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if USE_NUMBA else "numpy"
