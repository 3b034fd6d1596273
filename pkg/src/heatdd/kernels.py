"""Select the compiled kernel backend, falling back to NumPy.

Set ``HEATDD_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("HEATDD_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import p1_triplets, slobodetskii_weights
    BACKEND = "python"
else:
    try:
        from ._kernels import p1_triplets, slobodetskii_weights
        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import p1_triplets, slobodetskii_weights
        BACKEND = "python"

__all__ = ["p1_triplets", "slobodetskii_weights", "BACKEND"]
