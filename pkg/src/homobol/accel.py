"""Acceleration backend selection.

Hot loops live in ``_loops_numba`` (numba @njit) with pure-numpy twins in
``_loops_numpy``.  The numba path is the default whenever numba imports;
set the environment variable ``HOMOBOL_NO_NUMBA=1`` to force the numpy
fallback (useful for debugging and for the backend-comparison benchmark).

Both backends evaluate the same sums; they may differ only in floating
point association, so results agree to ~1e-13 relative.
"""

import os

NO_NUMBA = os.environ.get("HOMOBOL_NO_NUMBA", "0") not in ("", "0", "false", "False")

if not NO_NUMBA:
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NO_NUMBA


def set_threads(n):
    """Set worker-thread count for the collision loops (numba path only)."""
    if n is None:
        return
    n = max(1, int(n))
    if USE_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def get_loops():
    """Return the active loops module."""
    if USE_NUMBA:
        from . import _loops_numba as loops
    else:
        from . import _loops_numpy as loops
    return loops
