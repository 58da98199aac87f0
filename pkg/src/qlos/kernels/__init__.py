"""Hot-loop kernel backends.

Two interchangeable implementations of the frame-level Monte Carlo loops:

* ``qlos.kernels._fast`` - Cython extension, used when importable
* ``qlos.kernels.reference`` - vectorized NumPy fallback

Both consume identical pre-generated input arrays and produce bit-identical
error counts. Selection happens at import time; set ``QLOS_KERNEL_BACKEND``
to ``fast`` or ``reference`` to force one (``fast`` raises if the extension
is missing).
"""

import os

from . import reference

_requested = os.environ.get("QLOS_KERNEL_BACKEND", "auto").lower()

if _requested not in ("auto", "fast", "reference"):
    raise ValueError(f"QLOS_KERNEL_BACKEND must be auto|fast|reference, got {_requested!r}")

if _requested == "reference":
    active = reference
    BACKEND = "reference"
else:
    try:
        from . import _fast

        active = _fast
        BACKEND = "fast"
    except ImportError:
        if _requested == "fast":
            raise
        active = reference
        BACKEND = "reference"


def get_backend(name: str = "active"):
    """Return a kernel backend module by name: active|fast|reference."""
    if name == "active":
        return active
    if name == "reference":
        return reference
    if name == "fast":
        from . import _fast

        return _fast
    raise ValueError(f"unknown backend {name!r}")
