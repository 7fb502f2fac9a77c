"""Backend selection for the per-cell kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SLOWFAST_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used.  ``BACKEND`` names the choice.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pykernels
from ._pykernels import pack

__all__ = ["BACKEND", "manifold_roots", "stiff_ub_solve", "pack", "get_backend", "use_backend"]


def _want_pure() -> bool:
    return os.environ.get("SLOWFAST_PURE_PYTHON", "") not in ("", "0")


def get_backend(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


if _want_pure():
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

manifold_roots = _impl.manifold_roots
stiff_ub_solve = _impl.stiff_ub_solve


@contextmanager
def use_backend(name: str):
    """Temporarily route every solver through the named backend."""
    global BACKEND, manifold_roots, stiff_ub_solve
    saved = BACKEND, manifold_roots, stiff_ub_solve
    impl = get_backend(name)
    BACKEND, manifold_roots, stiff_ub_solve = name, impl.manifold_roots, impl.stiff_ub_solve
    try:
        yield impl
    finally:
        BACKEND, manifold_roots, stiff_ub_solve = saved
