"""Hot-kernel backend selection.

Imports the compiled extension when present, otherwise the pure-Python
fallback.  ``METRICSEARCH_NO_EXT=1`` forces the fallback (used by the
benchmark and the parity tests).  ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

if os.environ.get("METRICSEARCH_NO_EXT"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND

levenshtein = _impl.levenshtein
levenshtein_many = _impl.levenshtein_many
euclidean_to_many = _impl.euclidean_to_many
l1_to_many = _impl.l1_to_many
solve_transport = _impl.solve_transport
exact_alpha_enumeration = _impl.exact_alpha_enumeration

# numpy's vectorized mismatch count beats the compiled loop (see
# benchmarks/bench_kernels.py), so hamming always uses the numpy path
from ._pykernels import hamming_to_many

__all__ = [
    "BACKEND",
    "levenshtein",
    "levenshtein_many",
    "euclidean_to_many",
    "l1_to_many",
    "hamming_to_many",
    "solve_transport",
    "exact_alpha_enumeration",
]
