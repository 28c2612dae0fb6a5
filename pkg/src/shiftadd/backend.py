"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting the
environment variable SHIFTADD_PURE_PYTHON (to anything non-empty) forces
the NumPy fallback.  Both expose the same functions with identical
semantics; ``benchmarks/bench_backends.py`` compares their speed.
"""

import os

from . import _kernels_py

if os.environ.get("SHIFTADD_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND_NAME = _impl.BACKEND_NAME
omp_batch = _impl.omp_batch
hadamard4_scan = _impl.hadamard4_scan


def backend_name() -> str:
    return BACKEND_NAME
