"""Switch between numba-compiled kernels and the interpreted fallback.

Set ``TICKSIM_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python over numpy arrays. Both paths execute the same source and consume the
same random streams, so results agree bit for bit.
"""
import os

_FLAG = os.environ.get("TICKSIM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit(fn=None, *, inline=False):
    """``@jit`` or ``@jit(inline=True)``; identity when numba is off."""
    if fn is None:
        return lambda f: jit(f, inline=inline)
    if USE_NUMBA:
        opts = {"inline": "always"} if inline else {}
        # kernels never allocate; without NRT every array argument skips
        # atomic refcounting, which otherwise dominates per-call cost
        return numba.njit(cache=True, nogil=True, _nrt=False, **opts)(fn)
    return fn
