"""Raster kernels with a compiled core and a NumPy fallback.

The compiled extension is preferred when importable; set
THICKET_KERNEL_BACKEND=python or =compiled to force a choice.
`BACKEND` reports which implementation is active.
"""

import os

_choice = os.environ.get("THICKET_KERNEL_BACKEND", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise RuntimeError(f"THICKET_KERNEL_BACKEND must be auto, compiled or python, got {_choice!r}")

if _choice == "python":
    from . import _python as _impl

    BACKEND = "python"
else:
    try:
        from . import _compiled as _impl

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _python as _impl

        BACKEND = "python"

shift_image = _impl.shift_image
shift_accumulate = _impl.shift_accumulate
radon_project = _impl.radon_project
backproject = _impl.backproject

__all__ = ["BACKEND", "shift_image", "shift_accumulate", "radon_project", "backproject"]
