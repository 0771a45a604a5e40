"""Backend selection for the resolvent marching kernel.

Prefers the compiled Cython extension; falls back to the NumPy
implementation when the extension is unavailable or when the environment
variable ``MEMSTEER_PURE_PY=1`` requests the pure-Python path (used by
the backend-parity tests and the benchmark).
"""

import os

from . import march_py

if os.environ.get("MEMSTEER_PURE_PY") == "1":
    march_resolvent = march_py.march_resolvent
    BACKEND = "python"
else:
    try:
        from ._march_cy import march_resolvent

        BACKEND = "cython"
    except ImportError:
        march_resolvent = march_py.march_resolvent
        BACKEND = "python"

__all__ = ["march_resolvent", "BACKEND", "march_py"]
