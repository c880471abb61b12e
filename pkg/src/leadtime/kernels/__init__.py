"""Hot-loop kernels with backend selection at import time.

The compiled Cython extension is preferred when it was built; otherwise the
pure-numpy fallback serves the same API.  Set ``LEADTIME_PURE=1`` to force
the fallback (used by the benchmark and for debugging).
"""

import os

if os.environ.get("LEADTIME_PURE"):
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

best_split = _impl.best_split
grow_tree = _impl.grow_tree
grow_tree_dense = _impl.grow_tree_dense
cd_sweep = _impl.cd_sweep
HAVE_COMPILED = BACKEND == "compiled"

__all__ = [
    "best_split",
    "grow_tree",
    "grow_tree_dense",
    "cd_sweep",
    "BACKEND",
    "HAVE_COMPILED",
]
