"""Select the reaching kernel: compiled when available, pure Python otherwise.

Set ``PFABRIK_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("PFABRIK_PURE_PYTHON", "") not in ("", "0"):
    from . import _reach_py as reach

    BACKEND = "python"
else:
    try:
        from . import _reach_c as reach

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _reach_py as reach

        BACKEND = "python"

__all__ = ["BACKEND", "reach"]
