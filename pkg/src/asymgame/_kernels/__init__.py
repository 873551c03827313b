"""Kernel engine selection.

Imports the compiled core when available, otherwise the pure-Python
fallback.  Set ``ASYMGAME_PURE_PYTHON=1`` to force the fallback.  Both
engines expose the same functions with identical semantics and random-draw
order, so results are bitwise-identical either way.
"""

import os

from . import pyfallback

if os.environ.get("ASYMGAME_PURE_PYTHON", "") not in ("", "0"):
    _impl = pyfallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = pyfallback

ENGINE = _impl.ENGINE
SimplexFailure = _impl.SimplexFailure
matrix_game = _impl.matrix_game
final_state = _impl.final_state
payoff_open_loop = _impl.payoff_open_loop
rollout = _impl.rollout


def engines():
    """Return the available engine modules keyed by name (for benchmarks)."""
    out = {"python": pyfallback}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out
