"""Small graph families used as test spaces and CLI fixtures."""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DomainError
from .space import CoarseSpace


def cycle_edges(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise DomainError("cycle needs at least one vertex")
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def path_edges(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def complete_edges(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def petersen_edges() -> list[tuple[int, int]]:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return outer + spokes + inner


def cycle(n: int) -> CoarseSpace:
    return CoarseSpace.from_components([(n, cycle_edges(n))])


def path(n: int) -> CoarseSpace:
    return CoarseSpace.from_components([(n, path_edges(n))])


def complete(n: int) -> CoarseSpace:
    return CoarseSpace.from_components([(n, complete_edges(n))])


def petersen() -> CoarseSpace:
    return CoarseSpace.from_components([(10, petersen_edges())])


def disjoint_union(parts) -> CoarseSpace:
    """Union of spaces or of ``(size, edges)`` component descriptions, in order."""
    comps = []
    for p in parts:
        if isinstance(p, CoarseSpace):
            comps.extend(p.component_graph(c) for c in range(p.n_components))
        else:
            comps.append(p)
    return CoarseSpace.from_components(comps)


def _is_connected(n: int, edges) -> bool:
    seen = np.zeros(n, bool)
    nbrs = [[] for _ in range(n)]
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for w in nbrs[u]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return bool(seen.all())


def random_regular_edges(n: int, d: int, rng: np.random.Generator, max_tries: int = 1000) -> list[tuple[int, int]]:
    """Simple connected ``d``-regular graph by the configuration model with rejection."""
    if n * d % 2 or d >= n or d < 1:
        raise DomainError(f"no simple {d}-regular graph on {n} vertices")
    for _ in range(max_tries):
        stubs = np.repeat(np.arange(n), d)
        edges: set[tuple[int, int]] = set()
        ok = True
        # pair stubs one by one, retrying locally to avoid most loops and repeats
        pool = list(rng.permutation(stubs))
        while pool:
            a = pool.pop()
            for attempt in range(20):
                j = int(rng.integers(len(pool)))
                b = pool[j]
                e = (min(a, b), max(a, b))
                if a != b and e not in edges:
                    pool[j] = pool[-1]
                    pool.pop()
                    edges.add(e)
                    break
            else:
                ok = False
                break
        if ok and _is_connected(n, edges):
            return sorted(edges)
    raise DomainError(f"failed to sample a connected {d}-regular graph on {n} vertices")


def random_regular(n: int, d: int, seed: int | None = None) -> CoarseSpace:
    rng = np.random.default_rng(seed)
    return CoarseSpace.from_components([(n, random_regular_edges(n, d, rng))])


def random_connected_edges(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random spanning tree plus independent extra edges with probability ``p``."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(i)])
        edges.add((min(a, b), max(a, b)))
    if n > 1 and p > 0:
        iu, ju = np.triu_indices(n, 1)
        pick = rng.random(iu.shape[0]) < p
        edges.update(zip(iu[pick].tolist(), ju[pick].tolist()))
    return sorted(edges)


def random_connected(n: int, p: float = 0.05, seed: int | None = None) -> CoarseSpace:
    rng = np.random.default_rng(seed)
    return CoarseSpace.from_components([(n, random_connected_edges(n, p, rng))])
