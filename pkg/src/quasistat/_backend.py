"""Select the compiled kernels when available, else the numpy fallback.

Set ``QUASISTAT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QUASISTAT_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
kernels = _compiled if _compiled is not None else _kernels_py
