"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``PCKHDMR_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used.  ``BACKEND`` names the choice.
"""
import os

from . import _kernels_py

_force_py = os.environ.get("PCKHDMR_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

gauss_corr = _impl.gauss_corr
concentrated_loglik = _impl.concentrated_loglik
entropy_scores = _impl.entropy_scores

__all__ = ["BACKEND", "gauss_corr", "concentrated_loglik", "entropy_scores"]
