"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


def rewire_swaps(src, dst, n, directed, e1, e2, flip):
    """Apply double-edge swap attempts in place; return the accepted count."""
    present = set(zip(src.tolist(), dst.tolist()))
    if not directed:
        present |= {(b, a) for a, b in present}
    s = src.tolist()
    d = dst.tolist()
    accepted = 0
    for i, j, f in zip(e1.tolist(), e2.tolist(), flip.tolist()):
        if i == j:
            continue
        u, v = s[i], d[i]
        x, y = s[j], d[j]
        if not directed and f:
            x, y = y, x
        if u == y or x == v or u == x or v == y:
            continue
        if (u, y) in present or (x, v) in present:
            continue
        present.discard((u, v))
        present.discard((s[j], d[j]))
        if not directed:
            present.discard((v, u))
            present.discard((d[j], s[j]))
            present.add((y, u))
            present.add((v, x))
        present.add((u, y))
        present.add((x, v))
        d[i] = y
        s[j] = x
        d[j] = v
        accepted += 1
    src[:] = s
    dst[:] = d
    return accepted


def _phi(boundary, vol_side, vol_total):
    denom = np.minimum(vol_side, vol_total - vol_side)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(boundary == 0, 0.0, boundary / denom)
    return phi


def min_cut_exhaustive(W, directed, chunk=1 << 15):
    """Minimum conductance over all nontrivial cuts, vectorized over subset masks.

    The last node is pinned outside C, giving 2**(k-1) - 1 cuts; for directed
    weights each cut is scored on both sides. Returns ``(mask, phi)``; ties
    resolve to the smallest mask.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    k = W.shape[0]
    if k < 2 or k > 62:
        raise ValueError("exhaustive cut search needs 2 <= k <= 62 nodes")
    deg = W.sum(axis=1) + (W.sum(axis=0) if directed else 0.0)
    vol_total = deg.sum()
    full = (1 << k) - 1
    bits = np.arange(k, dtype=np.int64)
    best, best_mask = 2.0, -1
    limit = 1 << (k - 1)
    for start in range(1, limit, chunk):
        masks = np.arange(start, min(start + chunk, limit), dtype=np.int64)
        S = ((masks[:, None] >> bits) & 1).astype(np.float64)
        T = 1.0 - S
        vol_c = S @ deg
        cut_out = np.einsum("ij,ij->i", S @ W, T)
        candidates = [(_phi(cut_out, vol_c, vol_total), masks)]
        if directed:
            cut_in = np.einsum("ij,ij->i", T @ W, S)
            candidates.append((_phi(cut_in, vol_total - vol_c, vol_total), full ^ masks))
        for phi, mk in candidates:
            low = phi.min()
            if low <= best:
                cand = int(mk[phi == low].min())
                if low < best or cand < best_mask:
                    best, best_mask = float(low), cand
    return best_mask, best


def bfs_distances(indptr, indices, sources):
    """Hop distances from each source; -1 marks unreachable targets."""
    n = len(indptr) - 1
    graph = csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    dist = shortest_path(graph, directed=True, unweighted=True, indices=np.asarray(sources))
    dist = np.atleast_2d(dist)
    out = np.full(dist.shape, -1, dtype=np.int32)
    finite = np.isfinite(dist)
    out[finite] = dist[finite].astype(np.int32)
    return out


def distance_histogram(indptr, indices, sources, block=256):
    """Count (source, target) pairs by hop distance; index 0 stays zero."""
    n = len(indptr) - 1
    hist = np.zeros(max(n, 1), dtype=np.int64)
    sources = np.asarray(sources, dtype=np.int64)
    for start in range(0, len(sources), block):
        dist = bfs_distances(indptr, indices, sources[start:start + block])
        dist = dist[dist > 0]
        hist += np.bincount(dist, minlength=len(hist))[: len(hist)]
    return hist
