"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built and
``NSGFRAMES_PURE_PYTHON`` is unset; otherwise the numpy fallback.
"""

import os

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

if _ckernels is not None and not os.environ.get("NSGFRAMES_PURE_PYTHON"):
    kernels = _ckernels
    BACKEND = "compiled"
else:
    kernels = _kernels_py
    BACKEND = "python"


def use_backend(name):
    """Switch the active kernels (``"compiled"`` or ``"python"``)."""
    global kernels, BACKEND
    try:
        kernels = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None
    BACKEND = name
