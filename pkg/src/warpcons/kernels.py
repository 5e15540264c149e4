"""Select the interleaving explorer: compiled if built, pure Python otherwise.

Set ``WARPCONS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("WARPCONS_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

explore = _impl.explore
IMPLEMENTATION = _impl.IMPLEMENTATION

NULL = _kernels_py.NULL
N_COUNTERS = _kernels_py.N_COUNTERS
COUNTER_NAMES = (
    "double_success",
    "overwrite",
    "lost_success",
    "unstable_read",
    "step_count",
    "counter",
    "hole",
)
