"""Hot kernels for move generation and observation encoding.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``CCMARL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as py

try:
    if os.environ.get("CCMARL_PURE_PYTHON"):
        raise ImportError("fallback forced by environment")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else py

BACKEND = "cython" if compiled is not None else "numpy"

legal_codes = _impl.legal_codes
encode_obs = _impl.encode_obs
obs_indices = _impl.obs_indices

__all__ = ["BACKEND", "compiled", "py", "legal_codes", "encode_obs", "obs_indices"]
