"""Hot inner loops, compiled when possible.

The Cython module ``_fast`` is used if it was built; otherwise the
pure-Python ``_slow`` module is loaded. Setting ``VALENCE_PIPE_PURE=1`` forces
the fallback. ``BACKEND`` reports which one is active.
"""

import os

from . import _slow

if os.environ.get("VALENCE_PIPE_PURE", "") not in ("", "0"):
    _impl = _slow
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _slow

BACKEND = "cython" if _impl is not _slow else "python"

run_maxima = _impl.run_maxima
accept_intervals = _impl.accept_intervals
betainc = _impl.betainc


def compiled():
    """Return the compiled module, or ``None`` when it was not built."""
    try:
        from . import _fast
    except ImportError:
        return None
    return _fast


__all__ = ["BACKEND", "run_maxima", "accept_intervals", "betainc", "compiled"]
