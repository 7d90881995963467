"""Hot numeric kernels with switchable backends.

The numba backend is the default; set AFDETECT_PURE_NUMPY=1 to force the
pure-numpy fallback (it is also selected automatically when numba cannot
be imported). `BACKEND` reports which one is active.
"""

import os

_flag = os.environ.get("AFDETECT_PURE_NUMPY", "").strip().lower()
FORCE_NUMPY = _flag in {"1", "true", "yes", "on"}

if FORCE_NUMPY:
    from . import _numpy as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on environment
        from . import _numpy as _impl
        BACKEND = "numpy"

lfilter = _impl.lfilter
dwt_periodic = _impl.dwt_periodic
idwt_periodic = _impl.idwt_periodic
best_split = _impl.best_split
knn_af_votes = _impl.knn_af_votes

__all__ = [
    "BACKEND",
    "FORCE_NUMPY",
    "lfilter",
    "dwt_periodic",
    "idwt_periodic",
    "best_split",
    "knn_af_votes",
]
