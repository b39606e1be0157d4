"""Rasterization kernel selection.

Prefers the compiled extension; falls back to the NumPy implementation when
the extension is not built. Set EYESEG_EVAL_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("EYESEG_EVAL_PURE"):
    from . import _core_py as _impl

    HAVE_COMPILED = False
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        from . import _core_py as _impl

        HAVE_COMPILED = False

IMPL_NAME = _impl.IMPL_NAME
ellipse_mask = _impl.ellipse_mask
polygon_mask = _impl.polygon_mask
