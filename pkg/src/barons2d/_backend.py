"""Select the stencil-kernel backend at import time.

The compiled extension is preferred; set BARONS2D_PURE_PYTHON=1 to force
the numpy fallback (the benchmark and the equivalence tests use this).
"""

import os

if os.environ.get("BARONS2D_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    """'compiled' when the Cython extension is active, else 'python'."""
    return kernels.BACKEND
