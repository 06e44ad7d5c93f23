"""Backend selection for the hot loops.

The compiled extension is preferred; the NumPy fallback is used when it is
missing or when ``QCAROBUST_PURE=1``.
"""
import os

from . import _kernels_py as pure

if os.environ.get("QCAROBUST_PURE", "") not in ("", "0"):
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "python"

config_counts = _impl.config_counts
uniform_counts = _impl.uniform_counts
result_indicator = _impl.result_indicator
uniform_indicator = _impl.uniform_indicator
grid_indicators = _impl.grid_indicators

__all__ = ["BACKEND", "pure", "config_counts", "uniform_counts", "result_indicator",
           "uniform_indicator", "grid_indicators"]
