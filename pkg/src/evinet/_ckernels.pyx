# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Signatures mirror ``evinet._pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

cnp.import_array()


def rewire_swaps(cnp.int64_t[::1] src, cnp.int64_t[::1] dst, long long n, bint directed,
                 cnp.int64_t[::1] e1, cnp.int64_t[::1] e2, cnp.uint8_t[::1] flip):
    """Apply double-edge swap attempts in place; return the accepted count."""
    cdef Py_ssize_t m = src.shape[0], t, attempts = e1.shape[0]
    cdef unordered_set[long long] present
    cdef long long u, v, x, y, i, j, tmp
    cdef long long accepted = 0
    present.reserve(2 * m + 1)
    for t in range(m):
        present.insert(src[t] * n + dst[t])
        if not directed:
            present.insert(dst[t] * n + src[t])
    for t in range(attempts):
        i = e1[t]
        j = e2[t]
        if i == j:
            continue
        u = src[i]; v = dst[i]
        x = src[j]; y = dst[j]
        if not directed and flip[t]:
            tmp = x; x = y; y = tmp
        if u == y or x == v or u == x or v == y:
            continue
        if present.count(u * n + y) or present.count(x * n + v):
            continue
        present.erase(u * n + v)
        present.erase(src[j] * n + dst[j])
        if not directed:
            present.erase(v * n + u)
            present.erase(dst[j] * n + src[j])
            present.insert(y * n + u)
            present.insert(v * n + x)
        present.insert(u * n + y)
        present.insert(x * n + v)
        dst[i] = y
        src[j] = x
        dst[j] = v
        accepted += 1
    return accepted


cdef inline double _phi(double boundary, double vol_side, double vol_total):
    cdef double other = vol_total - vol_side
    cdef double denom = vol_side if vol_side < other else other
    if boundary == 0.0:
        return 0.0
    return boundary / denom


def min_cut_exhaustive(double[:, ::1] W, bint directed):
    """Minimum conductance over all nontrivial cuts by Gray-code enumeration.

    The last node is pinned outside C, giving 2**(k-1) - 1 cuts; for directed
    weights each cut is scored on both sides. Returns ``(mask, phi)``; ties
    resolve to the smallest mask.
    """
    cdef Py_ssize_t k = W.shape[0], a, b
    if k < 2 or k > 62:
        raise ValueError("exhaustive cut search needs 2 <= k <= 62 nodes")
    cdef vector[double] deg = vector[double](k, 0.0)
    cdef vector[char] inC = vector[char](k, 0)
    cdef double vol_total = 0.0, vol_c = 0.0, cut_out = 0.0, cut_in = 0.0
    cdef double to_out, from_out, to_in, from_in, phi
    cdef long long i, limit = (<long long>1) << (k - 1)
    cdef long long gray, bit, best_mask = -1, full = (<long long>1 << k) - 1
    cdef double best = 2.0
    for a in range(k):
        for b in range(k):
            deg[a] += W[a, b]
            if directed:
                deg[a] += W[b, a]
        vol_total += deg[a]
    gray = 0
    for i in range(1, limit):
        bit = 0
        while not ((i >> bit) & 1):
            bit += 1
        gray ^= (<long long>1) << bit
        a = bit
        to_out = 0.0; from_out = 0.0; to_in = 0.0; from_in = 0.0
        for b in range(k):
            if b == a:
                continue
            if inC[b]:
                to_in += W[a, b]
                from_in += W[b, a]
            else:
                to_out += W[a, b]
                from_out += W[b, a]
        if inC[a]:
            inC[a] = 0
            vol_c -= deg[a]
            cut_out += from_in - to_out
            cut_in += to_in - from_out
        else:
            inC[a] = 1
            vol_c += deg[a]
            cut_out += to_out - from_in
            cut_in += from_out - to_in
        phi = _phi(cut_out, vol_c, vol_total)
        if phi < best or (phi == best and gray < best_mask):
            best = phi
            best_mask = gray
        if directed:
            phi = _phi(cut_in, vol_total - vol_c, vol_total)
            if phi < best or (phi == best and (full ^ gray) < best_mask):
                best = phi
                best_mask = full ^ gray
    return best_mask, best


def bfs_distances(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, cnp.int64_t[::1] sources):
    """Hop distances from each source; -1 marks unreachable targets."""
    cdef Py_ssize_t n = indptr.shape[0] - 1, s, head, tail, p
    cdef Py_ssize_t ns = sources.shape[0]
    out = np.full((ns, n), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] dist = out
    cdef vector[cnp.int64_t] queue = vector[cnp.int64_t](n)
    cdef cnp.int64_t u, v
    for s in range(ns):
        dist[s, sources[s]] = 0
        queue[0] = sources[s]
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue[tail] = v
                    tail += 1
    return out


def distance_histogram(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, cnp.int64_t[::1] sources):
    """Count (source, target) pairs by hop distance; index 0 stays zero."""
    cdef Py_ssize_t n = indptr.shape[0] - 1, s, head, tail, p
    hist_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] hist = hist_arr
    cdef vector[cnp.int32_t] dist = vector[cnp.int32_t](n, -1)
    cdef vector[cnp.int64_t] queue = vector[cnp.int64_t](n)
    cdef cnp.int64_t u, v
    for s in range(sources.shape[0]):
        dist[sources[s]] = 0
        queue[0] = sources[s]
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    hist[dist[v]] += 1
                    queue[tail] = v
                    tail += 1
        for p in range(tail):
            dist[queue[p]] = -1
    return hist_arr
