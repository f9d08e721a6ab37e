"""Kernel backend selection.

The compiled extension is used when it built successfully; setting
DELTAFORGE_KERNELS=python forces the pure-numpy fallback.  Both backends
export the same family_values(family, eps, n, u) surface.
"""

import os

from ._pykernels import FAMILIES, MAX_ORDER  # stable constants

if os.environ.get("DELTAFORGE_KERNELS", "").lower() in ("py", "python"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

family_values = _impl.family_values
BACKEND = _impl.BACKEND_NAME

__all__ = ["family_values", "BACKEND", "FAMILIES", "MAX_ORDER"]
