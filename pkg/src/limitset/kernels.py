"""Backend selection for the numeric kernels.

The compiled extension is used when it was built and ``LIMITSET_PURE_PYTHON``
is unset; otherwise the numpy/Python reference implementation is loaded.
"""

from __future__ import annotations

import os

if os.environ.get("LIMITSET_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND
hmodel_eval = _impl.hmodel_eval
hmodel_point = _impl.hmodel_point
marching_squares = _impl.marching_squares
label = _impl.label
directed_hausdorff = _impl.directed_hausdorff
dopri5 = _impl.dopri5


def backends() -> dict:
    """All importable backends by name (used by tests and the benchmark)."""
    from . import _pykernels
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
