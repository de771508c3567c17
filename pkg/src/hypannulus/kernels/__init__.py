"""Hot inner loops: compiled when the extension is built, NumPy otherwise.

Set ``HYPANNULUS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
power_series = _pykernels.power_series

if not os.environ.get("HYPANNULUS_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        power_series = _ckernels.power_series

__all__ = ["BACKEND", "power_series"]
