"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; otherwise the
NumPy implementations take over. Set PROXDIST_FORCE_PYTHON=1 to force the
fallback (used by the benchmark and the backend-parity tests).
"""

import os

from . import _pykern

if os.environ.get("PROXDIST_FORCE_PYTHON"):
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykern

BACKEND = _impl.BACKEND

pair_index = _impl.pair_index
triangle_apply = _impl.triangle_apply
triangle_apply_transpose = _impl.triangle_apply_transpose
incidence_apply = _impl.incidence_apply
incidence_apply_transpose = _impl.incidence_apply_transpose
pair_diff_apply = _impl.pair_diff_apply
pair_diff_apply_transpose = _impl.pair_diff_apply_transpose
l1_ball_threshold = _impl.l1_ball_threshold

__all__ = [
    "BACKEND",
    "pair_index",
    "triangle_apply",
    "triangle_apply_transpose",
    "incidence_apply",
    "incidence_apply_transpose",
    "pair_diff_apply",
    "pair_diff_apply_transpose",
    "l1_ball_threshold",
]
