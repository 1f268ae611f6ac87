"""Hot-kernel backend selection.

The PIE_BACKEND environment variable picks the implementation:

* unset / "auto": numba-compiled kernels when numba imports, else numpy
* "numba": require the compiled kernels
* "numpy": force the pure-numpy fallback

Both backends expose the same functions with bit-identical results on the
integer-weight graphs used throughout; see tests/test_kernels.py.
"""
from __future__ import annotations

import os
import warnings

_requested = os.environ.get("PIE_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import numba_backend as backend  # noqa: F401
    except ImportError:  # pragma: no cover - exercised only without numba
        warnings.warn("numba unavailable; using the pure-numpy kernel backend")
        from . import numpy_backend as backend  # noqa: F401
elif _requested == "numba":
    from . import numba_backend as backend  # noqa: F401
elif _requested == "numpy":
    from . import numpy_backend as backend  # noqa: F401
else:  # pragma: no cover
    raise RuntimeError(f"PIE_BACKEND={_requested!r} not recognized "
                       "(expected 'numba', 'numpy', or 'auto')")

BACKEND_NAME = backend.NAME

DELIVERED = backend.DELIVERED
STUCK = backend.STUCK
TTL_EXCEEDED = backend.TTL_EXCEEDED


def get_backend(name: str):
    """Fetch a backend module by name (used by tests and benchmarks)."""
    if name == "numba":
        from . import numba_backend
        return numba_backend
    if name == "numpy":
        from . import numpy_backend
        return numpy_backend
    raise ValueError(f"unknown backend {name!r}")
