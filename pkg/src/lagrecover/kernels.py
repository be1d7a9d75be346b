"""Backend selection for the PEV inner kernels.

The compiled ``_kernels`` extension is used when importable; otherwise the
numpy fallback in ``_pykernels``. Set ``LAGRECOVER_BACKEND=python`` to force
the fallback, or ``=cython`` to fail loudly when the extension is missing.
"""

import importlib
import os

from . import _pykernels

_requested = os.environ.get("LAGRECOVER_BACKEND", "auto").lower()


def _load_compiled():
    try:
        return importlib.import_module("lagrecover._kernels")
    except ImportError:
        return None


_compiled = _load_compiled() if _requested != "python" else None
if _requested == "cython" and _compiled is None:
    raise ImportError("LAGRECOVER_BACKEND=cython but lagrecover._kernels is not built")

_impl = _compiled if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "python"

greedy_charge_batch = _impl.greedy_charge_batch
dp_v2g_batch = _impl.dp_v2g_batch


def available_backends() -> list:
    out = ["python"]
    if _load_compiled() is not None:
        out.insert(0, "cython")
    return out


def get_backend(name: str):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built")
        return mod
    raise ValueError(f"unknown backend {name!r}")
