"""Hot-loop backend selection.

The compiled extension is used when it was built and ``EVINET_PURE_PYTHON``
is not set; otherwise the numpy fallback in ``_pykernels`` is used. Both
expose the same functions with the same argument conventions.
"""
import os

import numpy as np

from evinet import _pykernels as python

try:
    from evinet import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("EVINET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = compiled
    BACKEND = "cython"
else:
    _impl = python
    BACKEND = "python"


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def rewire_swaps(src, dst, n, directed, e1, e2, flip):
    """Apply swap attempts ``(e1[t], e2[t], flip[t])`` to the arc arrays in place."""
    return _impl.rewire_swaps(src, dst, int(n), bool(directed), _i64(e1), _i64(e2),
                              np.ascontiguousarray(flip, dtype=np.uint8))


def min_cut_exhaustive(W, directed):
    return _impl.min_cut_exhaustive(np.ascontiguousarray(W, dtype=np.float64), bool(directed))


def bfs_distances(indptr, indices, sources):
    return _impl.bfs_distances(_i64(indptr), _i64(indices), _i64(sources))


def distance_histogram(indptr, indices, sources):
    return _impl.distance_histogram(_i64(indptr), _i64(indices), _i64(sources))
