"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when the
extension was not built or when ``FPKLAB_PURE_PYTHON`` is set to a
non-empty value other than ``0``.
"""
import os

from fpklab import _fallback

if os.environ.get("FPKLAB_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from fpklab import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

inf_convolution = _impl.inf_convolution
superlevel_mass_1d = _impl.superlevel_mass_1d
superlevel_mass_2d = _impl.superlevel_mass_2d
gauss_interval = _fallback.gauss_interval

__all__ = [
    "BACKEND",
    "inf_convolution",
    "superlevel_mass_1d",
    "superlevel_mass_2d",
    "gauss_interval",
]
