"""Hot reduction and quadrature kernels.

The compiled extension is used when it was built; otherwise the NumPy
fallback is loaded. Set ``FRACSPACE_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"

if os.environ.get("FRACSPACE_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import pairwise_sum, power_sum, radial_transform
else:
    try:
        from ._ckernels import pairwise_sum, power_sum, radial_transform
        BACKEND = "cython"
    except ImportError:
        from ._pykernels import pairwise_sum, power_sum, radial_transform

__all__ = ["BACKEND", "pairwise_sum", "power_sum", "radial_transform"]
