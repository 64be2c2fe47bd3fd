"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set QPWAVES_FORCE_PYTHON=1 to force the fallback (used by the benchmark and
for debugging).
"""

import os

if os.environ.get("QPWAVES_FORCE_PYTHON") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        from . import _kernels_py as _impl

IMPL = _impl.IMPL
pack = _impl.pack
gather_scaled = _impl.gather_scaled
apply_diag = _impl.apply_diag
axpy = _impl.axpy
rk4_combine = _impl.rk4_combine
recip_one_plus = _impl.recip_one_plus
weighted_norm_sq = _impl.weighted_norm_sq
conj_flip = _impl.conj_flip
