"""Backend selection for the dense Cholesky kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``GAUSSDAG_PURE_PYTHON`` is set to a non-empty value,
the pure-Python implementation is used. ``BACKEND`` names the active one.
"""
import os

from gaussdag._kernels import _pykernels

if os.environ.get("GAUSSDAG_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from gaussdag._kernels import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

cholesky_lower = _impl.cholesky_lower
logdet_principal = _impl.logdet_principal

__all__ = ["BACKEND", "cholesky_lower", "logdet_principal"]
