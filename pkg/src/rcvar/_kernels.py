"""Select the coordinate-descent backend at import time.

The compiled extension is used when it was built; setting ``RCVAR_PURE=1``
forces the pure-Python kernel (both expose ``cd_weighted_lasso``).
"""

import os

from . import _cd_py

KERNELS = {"python": _cd_py.cd_weighted_lasso}
try:
    from ._cd import cd_weighted_lasso as _compiled
except ImportError:  # extension not built
    pass
else:
    KERNELS["cython"] = _compiled

BACKEND = "cython" if "cython" in KERNELS and not os.environ.get("RCVAR_PURE") else "python"
cd_weighted_lasso = KERNELS[BACKEND]
