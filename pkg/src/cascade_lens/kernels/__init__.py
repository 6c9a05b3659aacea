"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python reference
when the extension is missing (source checkout without a compiler) or when
``CASCADE_LENS_PURE=1`` forces it. Both backends are bit-for-bit
interchangeable.
"""

import os

from . import pure

if os.environ.get("CASCADE_LENS_PURE", "") not in ("", "0"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

trigger_scores = _impl.trigger_scores
detect_chains = _impl.detect_chains

__all__ = ["BACKEND", "trigger_scores", "detect_chains", "pure"]
