"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy implementation
when the extension is missing or when the environment variable
HWVQE_PURE_PYTHON is set to a non-empty value.
"""

import os

if os.environ.get("HWVQE_PURE_PYTHON"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"

apply_v_block = kernels.apply_v_block
apply_x = kernels.apply_x
