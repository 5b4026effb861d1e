"""Backend selection for the CSR kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``GRAPHFILTER_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
csr_spmm = _kernels_py.csr_spmm
csr_spmm_add = _kernels_py.csr_spmm_add

if os.environ.get("GRAPHFILTER_BACKEND", "").lower() not in ("python", "py", "numpy"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        csr_spmm = _compiled.csr_spmm
        csr_spmm_add = _compiled.csr_spmm_add


def available_backends():
    """Names of backends importable in this environment."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names


def get_backend(name):
    """Return ``(csr_spmm, csr_spmm_add)`` for a named backend."""
    if name == "python":
        return _kernels_py.csr_spmm, _kernels_py.csr_spmm_add
    if name == "cython":
        from . import _kernels
        return _kernels.csr_spmm, _kernels.csr_spmm_add
    raise ValueError(f"unknown backend {name!r}")
