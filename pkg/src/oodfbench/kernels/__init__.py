"""Backend selection for the hot numeric kernels.

Set OODF_BACKEND=numpy to force the pure-numpy fallback; OODF_BACKEND=numba
requires numba and fails loudly if it is missing. By default the jitted
kernels are used when numba imports, falling back to numpy otherwise.
`benchmarks/bench_kernels.py` times the two implementations side by side.
"""

import os
import warnings

_requested = os.environ.get("OODF_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"OODF_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError as exc:
        if _requested == "numba":
            raise ImportError(f"OODF_BACKEND=numba but numba is unusable: {exc}") from exc
        warnings.warn("numba unavailable, falling back to pure-numpy kernels")
        from . import _numpy as _impl

        BACKEND = "numpy"

affine = _impl.affine
affine_relu = _impl.affine_relu
relu = _impl.relu
backprop_delta = _impl.backprop_delta
input_grad = _impl.input_grad
grad_weights = _impl.grad_weights
project_rows = _impl.project_rows
sgd_update = _impl.sgd_update
owm_rank1 = _impl.owm_rank1
owm_absorb = _impl.owm_absorb

__all__ = [
    "BACKEND",
    "affine",
    "affine_relu",
    "relu",
    "backprop_delta",
    "input_grad",
    "grad_weights",
    "project_rows",
    "sgd_update",
    "owm_rank1",
    "owm_absorb",
]
