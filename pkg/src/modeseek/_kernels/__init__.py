"""Numerical kernels with a compiled core and a pure-NumPy fallback.

The compiled extension covers the truly hot loops: per-seed fixed-point
iteration and the incremental connected-components scan.  One-shot
synchronous updates (used by the blurring algorithms) are BLAS-bound matrix
products, so they always use the NumPy path.

Set ``MODESEEK_PURE=1`` to force the fallback; ``BACKEND`` reports which
implementation is active.
"""

import os

from . import _pure as pure

compiled = None
if os.environ.get("MODESEEK_PURE", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else pure
BACKEND = "compiled" if compiled is not None else "pure"

seek_gaussian = active.seek_gaussian
seek_gaussian_adaptive = active.seek_gaussian_adaptive
seek_epanechnikov = active.seek_epanechnikov
cc_tight_labels = active.cc_tight_labels

shift_gaussian = pure.shift_gaussian
shift_gaussian_adaptive = pure.shift_gaussian_adaptive
shift_epanechnikov = pure.shift_epanechnikov
log_density_gaussian = pure.log_density_gaussian
