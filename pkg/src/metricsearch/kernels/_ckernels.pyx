# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: edit-distance DP, batch distances, the transport
solver's augmentation loop, and the concentration-function enumeration.

Signatures and semantics match ``_pykernels`` exactly; parity is enforced by
the kernel test suite.
"""

import numpy as np

BACKEND = "c"

cdef double FLOW_TOL = 1e-11
cdef double INF = float("inf")


cdef Py_ssize_t _lev_core(Py_UCS4[::1] ca, Py_ssize_t la,
                          Py_UCS4[::1] cb, Py_ssize_t lb,
                          Py_ssize_t[::1] prev, Py_ssize_t[::1] cur) noexcept nogil:
    cdef Py_ssize_t i, j, cost, best, tmp
    for j in range(lb + 1):
        prev[j] = j
    for i in range(1, la + 1):
        cur[0] = i
        for j in range(1, lb + 1):
            cost = 0 if ca[i - 1] == cb[j - 1] else 1
            best = prev[j] + 1
            tmp = cur[j - 1] + 1
            if tmp < best:
                best = tmp
            tmp = prev[j - 1] + cost
            if tmp < best:
                best = tmp
            cur[j] = best
        prev, cur = cur, prev
    return prev[lb]


cdef _copy_codepoints(str s, Py_UCS4[::1] out):
    cdef Py_ssize_t i
    for i in range(len(s)):
        out[i] = s[i]


def levenshtein(str a, str b):
    """Unit-cost edit distance (insert / delete / substitute)."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la < lb:
        a, b = b, a
        la, lb = lb, la
    cdef Py_UCS4[::1] ca = np.empty(la, dtype=np.uint32)
    cdef Py_UCS4[::1] cb = np.empty(lb, dtype=np.uint32)
    _copy_codepoints(a, ca)
    _copy_codepoints(b, cb)
    cdef Py_ssize_t[::1] prev = np.empty(lb + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] cur = np.empty(lb + 1, dtype=np.intp)
    return _lev_core(ca, la, cb, lb, prev, cur)


def levenshtein_many(list strings, str q):
    cdef Py_ssize_t n = len(strings)
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t lq = len(q)
    cdef Py_ssize_t cap = lq
    cdef Py_ssize_t i, ls
    for i in range(n):
        ls = len(<str>strings[i])
        if ls > cap:
            cap = ls
    cdef Py_UCS4[::1] ca = np.empty(cap if cap > 0 else 1, dtype=np.uint32)
    cdef Py_UCS4[::1] cq = np.empty(lq if lq > 0 else 1, dtype=np.uint32)
    _copy_codepoints(q, cq)
    cdef Py_ssize_t[::1] prev = np.empty(cap + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] cur = np.empty(cap + 1, dtype=np.intp)
    cdef str s
    for i in range(n):
        s = <str>strings[i]
        ls = len(s)
        if s == q:
            out[i] = 0
        elif ls == 0:
            out[i] = lq
        elif lq == 0:
            out[i] = ls
        else:
            _copy_codepoints(s, ca)
            if ls >= lq:
                out[i] = _lev_core(ca, ls, cq, lq, prev, cur)
            else:
                out[i] = _lev_core(cq, lq, ca, ls, prev, cur)
    return out_arr


def euclidean_to_many(x, q):
    x = np.ascontiguousarray(x, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[::1] qv = q
    out_arr = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc, d
    with nogil:
        for i in range(xv.shape[0]):
            acc = 0.0
            for j in range(xv.shape[1]):
                d = xv[i, j] - qv[j]
                acc += d * d
            out[i] = acc ** 0.5
    return out_arr


def l1_to_many(x, q):
    x = np.ascontiguousarray(x, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[::1] qv = q
    out_arr = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc, d
    with nogil:
        for i in range(xv.shape[0]):
            acc = 0.0
            for j in range(xv.shape[1]):
                d = xv[i, j] - qv[j]
                acc += d if d >= 0.0 else -d
            out[i] = acc
    return out_arr


def hamming_to_many(x, q):
    x = np.ascontiguousarray(x, dtype=np.uint32)
    q = np.ascontiguousarray(q, dtype=np.uint32)
    cdef unsigned int[:, ::1] xv = x
    cdef unsigned int[::1] qv = q
    out_arr = np.empty(xv.shape[0], dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef long long acc
    with nogil:
        for i in range(xv.shape[0]):
            acc = 0
            for j in range(xv.shape[1]):
                if xv[i, j] != qv[j]:
                    acc += 1
            out[i] = acc
    return out_arr


def solve_transport(cost, supply):
    """Min-cost transshipment on a complete symmetric graph; see _pykernels."""
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    cdef double[:, ::1] c = cost
    cdef Py_ssize_t m = len(supply)
    excess_arr = np.asarray(supply, dtype=np.float64).copy()
    excess_arr -= excess_arr.sum() / m
    cdef double[::1] excess = excess_arr
    flows_arr = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] flows = flows_arr
    price_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] price = price_arr
    if m == 1:
        return flows_arr, -price_arr

    dist_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    parent_arr = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    prev_arr = np.empty(m, dtype=np.uint8)
    cdef unsigned char[::1] parent_rev = prev_arr
    done_arr = np.empty(m, dtype=np.uint8)
    cdef unsigned char[::1] done = done_arr

    cdef Py_ssize_t guard = 10 * m * m + 100
    cdef Py_ssize_t it, s, t, u, v, scan, w
    cdef double best, nd, base, theta, cap, dt
    cdef bint found

    for it in range(guard):
        s = -1
        for v in range(m):
            if excess[v] > FLOW_TOL:
                s = v
                break
        if s < 0:
            return flows_arr, -price_arr

        with nogil:
            for v in range(m):
                dist[v] = INF
                parent[v] = -1
                parent_rev[v] = 0
                done[v] = 0
            dist[s] = 0.0
            t = -1
            for scan in range(m):
                u = -1
                best = INF
                for v in range(m):
                    if not done[v] and dist[v] < best:
                        best = dist[v]
                        u = v
                if u < 0:
                    break
                done[u] = 1
                if excess[u] < -FLOW_TOL:
                    t = u
                    break
                for v in range(m):
                    if done[v] or v == u:
                        continue
                    if flows[v, u] > FLOW_TOL:
                        base = -c[u, v]
                    else:
                        base = c[u, v]
                    nd = dist[u] + base + price[u] - price[v]
                    if nd < dist[u]:
                        nd = dist[u]
                    if nd < dist[v] - 1e-15:
                        dist[v] = nd
                        parent[v] = u
                        parent_rev[v] = 1 if flows[v, u] > FLOW_TOL else 0
        if t < 0:
            raise RuntimeError("transport: no augmenting path (unbalanced supply)")

        dt = dist[t]
        for v in range(m):
            price[v] += dist[v] if dist[v] < dt else dt

        theta = excess[s]
        if -excess[t] < theta:
            theta = -excess[t]
        v = t
        while v != s:
            u = parent[v]
            if parent_rev[v]:
                cap = flows[v, u]
                if cap < theta:
                    theta = cap
            v = u
        v = t
        while v != s:
            u = parent[v]
            if parent_rev[v]:
                flows[v, u] -= theta
            else:
                flows[u, v] += theta
            v = u
        excess[s] -= theta
        excess[t] += theta

    raise RuntimeError("transport: augmentation limit exceeded")


def exact_alpha_enumeration(dist, weights, grid):
    """True concentration function of a finite space by subset enumeration."""
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[:, ::1] d = dist
    cdef double[::1] w = weights
    cdef double[::1] g = grid
    cdef Py_ssize_t n = len(weights)
    cdef Py_ssize_t ng = len(grid)
    best_arr = np.full(ng, np.inf)
    cdef double[::1] best = best_arr
    bucket_arr = np.empty(ng + 1, dtype=np.float64)
    cdef double[::1] bucket = bucket_arr
    cdef double half = 0.5 - 1e-12
    cdef unsigned long long mask, total = (<unsigned long long>1) << n
    cdef Py_ssize_t i, a, k, lo, hi, mid
    cdef double wsum, wmin, dmin, dv, acc

    with nogil:
        for mask in range(1, total):
            wsum = 0.0
            wmin = INF
            for i in range(n):
                if (mask >> i) & 1:
                    wsum += w[i]
                    if w[i] < wmin:
                        wmin = w[i]
            if wsum < half or wsum - wmin >= half:
                continue
            for k in range(ng + 1):
                bucket[k] = 0.0
            for i in range(n):
                dmin = INF
                for a in range(n):
                    if (mask >> a) & 1:
                        dv = d[a, i]
                        if dv < dmin:
                            dmin = dv
                # first grid index with grid > dmin (mass enters there)
                lo = 0
                hi = ng
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if g[mid] > dmin:
                        hi = mid
                    else:
                        lo = mid + 1
                bucket[lo] += w[i]
            acc = 0.0
            for k in range(ng):
                acc += bucket[k]
                if acc < best[k]:
                    best[k] = acc
    alpha = np.clip(1.0 - best_arr, 0.0, 0.5)
    alpha[alpha < 1e-12] = 0.0  # swallow float dust in full-mass sums
    return alpha
