"""Scoring kernels: compiled extension when available, numpy fallback.

Set HYQA_PURE_PYTHON=1 to force the fallback (used by the kernel benchmark
and by tests that exercise both paths). Both implementations perform the
same double-precision arithmetic elementwise, so their outputs are
bit-identical.
"""

import os

from . import pyimpl

if os.environ.get("HYQA_PURE_PYTHON"):
    _impl = pyimpl
    HAVE_EXTENSION = False
else:
    try:
        from . import _scoring as _impl  # type: ignore[no-redef]

        HAVE_EXTENSION = True
    except ImportError:
        _impl = pyimpl
        HAVE_EXTENSION = False

bm25_accumulate = _impl.bm25_accumulate

__all__ = ["bm25_accumulate", "pyimpl", "HAVE_EXTENSION"]
