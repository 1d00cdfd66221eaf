"""Hot kernels: compiled extension when available, pure Python otherwise.

Set ``KISIMPLE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("KISIMPLE_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None and _impl is compiled_backend else "python"

fnv1a_64 = _impl.fnv1a_64
count_syllables = _impl.count_syllables
hashed_features = _impl.hashed_features
sparse_dot = _impl.sparse_dot
sgd_epoch = _impl.sgd_epoch

__all__ = [
    "BACKEND", "compiled_backend", "python_backend", "fnv1a_64",
    "count_syllables", "hashed_features", "sparse_dot", "sgd_epoch",
]
