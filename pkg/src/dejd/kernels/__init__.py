"""Hot per-observation kernels with a compiled and a numpy implementation.

The compiled extension is used when it imports; set ``DEJD_KERNELS=python``
to force the numpy fallback (``DEJD_KERNELS=compiled`` makes a missing
extension an error).
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("compiled", "python")


def available_backends():
    return tuple(b for b in BACKENDS if b == "python" or _ckernels is not None)


def get_backend(name=None):
    """Return the kernel module for ``name`` (``None``/``"auto"`` picks the best)."""
    if name in (None, "auto"):
        name = os.environ.get("DEJD_KERNELS", "auto")
    if name == "auto":
        return _ckernels if _ckernels is not None else _pykernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels requested but dejd.kernels._ckernels is not built")
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}; choose from {BACKENDS + ('auto',)}")


def backend_name(module):
    return "compiled" if module is _ckernels and module is not None else "python"


default = get_backend()
BACKEND = backend_name(default)
xi_probabilities = default.xi_probabilities
update_latents = default.update_latents
