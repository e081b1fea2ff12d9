"""Backend selection for the numeric hot loops.

The compiled extension is used when it was built; otherwise the numpy
implementation is imported. Set ``GPT_THERMO_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GPT_THERMO_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def shannon_rows(dist):
    """Row-wise Shannon entropy in nats."""
    return _impl.shannon_rows(np.ascontiguousarray(dist, dtype=np.float64))


def mutual_information_rows(weights, channel):
    """Row-wise mutual information between the input label and the outcome."""
    w = np.ascontiguousarray(np.atleast_2d(weights), dtype=np.float64)
    c = np.ascontiguousarray(channel, dtype=np.float64)
    return _impl.mutual_information_rows(w, c)
