"""Hot inner loops, each with a numba and a vectorised numpy implementation.

The numba path is used when numba imports cleanly and ``COARSET_DISABLE_NUMBA``
is unset or false. Every public function accepts ``backend=`` so both paths can
be exercised side by side (tests and ``benchmarks/bench_kernels.py`` do this).

Graphs are passed in CSR form (``indptr``, ``indices``) without self loops.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


BACKEND = "numba" if HAVE_NUMBA and not _env_flag("COARSET_DISABLE_NUMBA") else "numpy"
BACKENDS = ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def _resolve(backend: str | None) -> str:
    backend = backend or BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {backend!r}")
    return backend


# ---------------------------------------------------------------------------
# breadth-first distances


@njit(cache=True)
def _bfs_distances_nb(indptr, indices, sources):
    n = indptr.shape[0] - 1
    out = np.full((sources.shape[0], n), -1, np.int32)
    queue = np.empty(n, np.int64)
    for k in range(sources.shape[0]):
        s = sources[k]
        out[k, s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            du = out[k, u]
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if out[k, w] < 0:
                    out[k, w] = du + 1
                    queue[tail] = w
                    tail += 1
    return out


def _bfs_distances_np(indptr, indices, sources):
    n = indptr.shape[0] - 1
    m = sources.shape[0]
    adj = sp.csr_matrix((np.ones(indices.shape[0], np.int32), indices, indptr), shape=(n, n))
    dist = np.full((m, n), -1, np.int32)
    rows = np.arange(m)
    dist[rows, sources] = 0
    frontier = sp.csr_matrix((np.ones(m, np.int32), (rows, sources)), shape=(m, n))
    level = 0
    while frontier.nnz:
        level += 1
        reach = (frontier @ adj).tocoo()
        fresh = dist[reach.row, reach.col] < 0
        r, c = reach.row[fresh], reach.col[fresh]
        dist[r, c] = level
        frontier = sp.csr_matrix((np.ones(r.shape[0], np.int32), (r, c)), shape=(m, n))
    return dist


def bfs_distances(indptr, indices, sources=None, backend: str | None = None) -> np.ndarray:
    """Hop distances from each source to every vertex; ``-1`` marks unreachable."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    n = indptr.shape[0] - 1
    if sources is None:
        sources = np.arange(n, dtype=np.int64)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _bfs_distances_nb(indptr, indices, sources)
    return _bfs_distances_np(indptr, indices, sources)


# ---------------------------------------------------------------------------
# girth


@njit(cache=True)
def _girth_nb(indptr, indices):
    n = indptr.shape[0] - 1
    best = np.int64(1) << 62
    dist = np.empty(n, np.int64)
    parent = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    for root in range(n):
        dist[:] = -1
        dist[root] = 0
        parent[root] = -1
        queue[0] = root
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue[tail] = w
                    tail += 1
                elif w != parent[u]:
                    cand = dist[u] + dist[w] + 1
                    if cand < best:
                        best = cand
    return best if best < (np.int64(1) << 62) else -1


def _girth_np(indptr, indices):
    n = indptr.shape[0] - 1
    if indices.shape[0] == 0:
        return -1
    dist = _bfs_distances_np(indptr, indices, np.arange(n, dtype=np.int64)).astype(np.int64)
    src = np.repeat(np.arange(n), np.diff(indptr))
    dst = indices
    du = dist[:, src]
    dw = dist[:, dst]
    reach = (du >= 0) & (dw >= 0)
    cands = []
    # an edge joining two vertices at equal depth closes an odd cycle
    same = reach & (du == dw)
    if same.any():
        cands.append(int((2 * du[same] + 1).min()))
    # a vertex with two parents one level up closes an even cycle
    up = reach & (du == dw - 1)
    roots, edge = np.nonzero(up)
    if roots.size:
        counts = np.bincount(roots * n + dst[edge], minlength=n * n).reshape(n, n)
        multi = counts >= 2
        if multi.any():
            cands.append(int((2 * dist[multi]).min()))
    return min(cands) if cands else -1


def girth(indptr, indices, backend: str | None = None) -> int:
    """Length of the shortest cycle, or ``-1`` for a forest."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if _resolve(backend) == "numba":
        return int(_girth_nb(indptr, indices))
    return int(_girth_np(indptr, indices))


# ---------------------------------------------------------------------------
# exhaustive edge expansion


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _cheeger_nb(adjmask, deg):
    n = adjmask.shape[0]
    half = n // 2
    best_cut = np.int64(-1)
    best_size = np.int64(1)
    best_mask = np.int64(0)
    s = np.int64(0)
    cut = np.int64(0)
    size = np.int64(0)
    for i in range(1, np.int64(1) << n):
        v = 0
        while not (i >> v) & 1:
            v += 1
        bit = np.int64(1) << v
        if s & bit:
            s ^= bit
            cut -= deg[v] - 2 * _popcount(adjmask[v] & s)
            size -= 1
        else:
            cut += deg[v] - 2 * _popcount(adjmask[v] & s)
            s ^= bit
            size += 1
        if 0 < size <= half:
            if best_cut < 0:
                better = True
            else:
                lhs = cut * best_size
                rhs = best_cut * size
                better = lhs < rhs or (lhs == rhs and s < best_mask)
            if better:
                best_cut = cut
                best_size = size
                best_mask = s
    return best_cut, best_size, best_mask


def _cheeger_np(adjmask, deg, chunk=1 << 20):
    n = adjmask.shape[0]
    half = n // 2
    us, ws = [], []
    for u in range(n):
        for w in range(u + 1, n):
            if (int(adjmask[u]) >> w) & 1:
                us.append(u)
                ws.append(w)
    best = (np.inf, -1, 0, 1)  # ratio, mask, cut, size
    total = 1 << n
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((masks[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1).astype(np.int8)
        size = bits.sum(axis=0, dtype=np.int64)
        cut = np.zeros(masks.shape[0], np.int64)
        for u, w in zip(us, ws):
            cut += bits[u] ^ bits[w]
        ok = (size > 0) & (size <= half)
        if not ok.any():
            continue
        ratio = np.where(ok, cut / np.maximum(size, 1), np.inf)
        r = ratio.min()
        if r < best[0]:
            k = int(np.flatnonzero(ratio == r)[0])
            best = (r, int(masks[k]), int(cut[k]), int(size[k]))
    return best[2], best[3], best[1]


def cheeger_exact(adjmask, deg, backend: str | None = None) -> tuple[int, int, int]:
    """Minimise ``cut(S)/|S|`` over non-empty ``S`` with ``|S| <= n // 2``.

    ``adjmask[v]`` is the neighbour bitmask of vertex ``v``. Returns
    ``(cut, size, mask)`` for the minimiser with the smallest mask; ``size`` is
    ``-1`` when no admissible subset exists (``n < 2``).
    """
    adjmask = np.ascontiguousarray(adjmask, dtype=np.int64)
    deg = np.ascontiguousarray(deg, dtype=np.int64)
    if adjmask.shape[0] < 2:
        return 0, -1, 0
    if _resolve(backend) == "numba":
        cut, size, mask = _cheeger_nb(adjmask, deg)
    else:
        cut, size, mask = _cheeger_np(adjmask, deg)
    return int(cut), int(size), int(mask)
