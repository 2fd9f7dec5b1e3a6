"""Pure-Python / numpy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable; also the
reference the extension is tested against.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_FLOW_TOL = 1e-11


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert / delete / substitute)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la < lb:  # keep the inner row short
        a, b, la, lb = b, a, lb, la
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        cur[0] = i
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[lb]


def levenshtein_many(strings: list[str], q: str) -> np.ndarray:
    return np.array([levenshtein(s, q) for s in strings], dtype=np.int64)


def euclidean_to_many(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    d = x - q
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def l1_to_many(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.abs(x - q).sum(axis=1)


def hamming_to_many(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.count_nonzero(x != q, axis=1).astype(np.int64)


def solve_transport(cost: np.ndarray, supply: np.ndarray):
    """Min-cost uncapacitated transshipment on a complete symmetric graph.

    `cost` is an (m, m) symmetric nonnegative matrix, `supply` an (m,) vector
    summing to ~0 (positive entries are sources, negative sinks).  Returns
    `(flows, potentials)` where `flows[i, j] >= 0` carries supply from i to j
    and `potentials` is a dual vector with
    ``potentials[i] - potentials[j] <= cost[i, j]`` for all pairs and
    ``potentials @ supply == total cost`` (complementary slackness).

    Successive shortest augmenting paths with Dijkstra node prices.
    """
    m = len(supply)
    excess = supply.astype(np.float64).copy()
    excess -= excess.sum() / m  # absorb float imbalance
    flows = np.zeros((m, m), dtype=np.float64)
    price = np.zeros(m, dtype=np.float64)
    if m == 1:
        return flows, -price

    guard = 10 * m * m + 100
    for _ in range(guard):
        src_candidates = np.nonzero(excess > _FLOW_TOL)[0]
        if len(src_candidates) == 0:
            break
        s = int(src_candidates[0])

        dist = np.full(m, np.inf)
        dist[s] = 0.0
        parent = np.full(m, -1, dtype=np.int64)
        parent_rev = np.zeros(m, dtype=bool)
        done = np.zeros(m, dtype=bool)
        t = -1
        for _scan in range(m):
            u = int(np.argmin(np.where(done, np.inf, dist)))
            if not np.isfinite(dist[u]) or done[u]:
                break
            done[u] = True
            if excess[u] < -_FLOW_TOL:
                t = u
                break
            # residual arcs u -> v: forward always, reverse where flow v->u > 0
            rev_ok = flows[:, u] > _FLOW_TOL
            base = np.where(rev_ok, -cost[u], cost[u])
            nd = dist[u] + base + price[u] - price
            nd = np.maximum(nd, dist[u])  # clamp float drift in reduced costs
            better = ~done & (nd < dist - 1e-15)
            if better.any():
                dist[better] = nd[better]
                parent[better] = u
                parent_rev[better] = rev_ok[better]
        if t < 0:
            raise RuntimeError("transport: no augmenting path (unbalanced supply)")

        price += np.minimum(dist, dist[t])

        # walk back to find the bottleneck, then apply
        theta = min(excess[s], -excess[t])
        v = t
        while v != s:
            u = int(parent[v])
            if parent_rev[v]:
                theta = min(theta, flows[v, u])
            v = u
        v = t
        while v != s:
            u = int(parent[v])
            if parent_rev[v]:
                flows[v, u] -= theta
            else:
                flows[u, v] += theta
            v = u
        excess[s] -= theta
        excess[t] += theta
    else:
        raise RuntimeError("transport: augmentation limit exceeded")

    return flows, -price


def exact_alpha_enumeration(dist: np.ndarray, weights: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """True concentration function of a finite space by subset enumeration.

    Scans every inclusion-minimal subset A with weight >= 1/2 and records, per
    grid radius, the least mass of the open neighbourhood of A.  Minimal
    subsets suffice: enlarging A only enlarges its neighbourhood.
    """
    n = len(weights)
    g = len(grid)
    best = np.full(g, np.inf)
    idx = np.arange(n, dtype=np.uint64)
    half = 0.5 - 1e-12
    chunk = max(1, (1 << 22) // (n * n))
    total = 1 << n
    for start in range(1, total, chunk):
        stop = min(start + chunk, total)
        masks = np.arange(start, stop, dtype=np.uint64)
        bits = ((masks[:, None] >> idx[None, :]) & 1).astype(bool)
        wsum = bits @ weights
        wmin = np.where(bits, weights[None, :], np.inf).min(axis=1)
        keep = (wsum >= half) & (wsum - wmin < half)
        if not keep.any():
            continue
        sel = bits[keep]
        # dist from every point to its nearest member of each subset
        d_to_a = np.where(sel[:, :, None], dist[None, :, :], np.inf).min(axis=1)
        masses = (d_to_a[:, None, :] < grid[None, :, None]) @ weights
        best = np.minimum(best, masses.min(axis=0))
    alpha = np.clip(1.0 - best, 0.0, 0.5)
    alpha[alpha < 1e-12] = 0.0  # swallow float dust in full-mass sums
    return alpha
