"""Hot scoring kernels with a compiled core and a NumPy fallback.

The two inner loops that dominate query latency — BM25 posting-list
accumulation and the exhaustive cosine scan — are implemented twice:

* ``_ckernels``: Cython extension compiled at install time.
* ``_pykernels``: NumPy implementation, always available.

Selection is per kernel, driven by ``benchmarks/bench_kernels.py``: the
compiled BM25 accumulation beats NumPy's fancy-indexing path ~5-7x (no
temporaries), while the dense cosine matvec belongs to BLAS, which beats a
plain compiled loop ~3-4x. So BM25 uses the extension when built and the
cosine scan always goes through NumPy. The backends agree to within
floating-point reduction order (tested at 1e-12), so selection is purely a
speed matter. Force the pure-NumPy set with IREC_FORCE_PY_KERNELS=1.
"""

from __future__ import annotations

import os

from . import _pykernels

_compiled = None
if not os.environ.get("IREC_FORCE_PY_KERNELS"):
    try:
        from . import _ckernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

bm25_accumulate = _compiled.bm25_accumulate if _compiled is not None else _pykernels.bm25_accumulate
cosine_scores = _pykernels.cosine_scores  # BLAS wins this one; see module docstring

#: Active BM25 backend: "compiled" or "numpy".
BACKEND = "compiled" if _compiled is not None else "numpy"


def backend_name() -> str:
    return BACKEND
