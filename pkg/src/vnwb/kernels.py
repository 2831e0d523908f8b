"""Select the compiled diagram kernels when available.

Set ``VNWB_PURE_PYTHON=1`` to force the pure-Python implementation.
"""

from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("VNWB_PURE_PYTHON") != "1":
    try:
        from ._kernels import closure_loops, compose  # type: ignore[import-not-found]

        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import closure_loops, compose
else:
    from ._kernels_py import closure_loops, compose

__all__ = ["BACKEND", "closure_loops", "compose"]
