"""Finite coarse spaces and the calculus of controlled sets.

A space has ``n`` points with dense ids ``0..n-1``, an explicit partition into
components and a symmetric generating set ``gen`` that contains the diagonal.
Controlled sets are finite sets of ordered pairs stored as sorted integer keys
``x * n + y``, so iteration order is always lexicographic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import DomainError, PreconditionError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Point(NamedTuple):
    id: int
    component: int


class ControlledSet:
    """A finite set of pairs ``(x, y)`` of points of an ``n``-point space."""

    __slots__ = ("n", "_keys")

    def __init__(self, n: int, pairs: Iterable[tuple[int, int]] | np.ndarray = ()):
        n = int(n)
        if n < 0:
            raise DomainError("space size must be non-negative")
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DomainError("pairs must have shape (k, 2)")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise DomainError(f"pair entries must lie in [0, {n})")
        self.n = n
        self._keys = _frozen(np.unique(arr[:, 0] * n + arr[:, 1]))

    @classmethod
    def _from_keys(cls, n: int, keys: np.ndarray) -> "ControlledSet":
        obj = cls.__new__(cls)
        obj.n = n
        obj._keys = _frozen(np.unique(np.asarray(keys, dtype=np.int64)))
        return obj

    @classmethod
    def diagonal(cls, n: int, points: Iterable[int] | None = None) -> "ControlledSet":
        pts = np.arange(n, dtype=np.int64) if points is None else np.asarray(list(points), dtype=np.int64)
        return cls._from_keys(n, pts * n + pts)

    @classmethod
    def from_matrix(cls, m) -> "ControlledSet":
        coo = sp.coo_matrix(m)
        nz = coo.data != 0
        return cls._from_keys(coo.shape[0], coo.row[nz].astype(np.int64) * coo.shape[0] + coo.col[nz])

    # -- basic protocol -------------------------------------------------
    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def pairs(self) -> np.ndarray:
        """Pairs as a ``(k, 2)`` array in lexicographic order."""
        if self.n == 0:
            return np.zeros((0, 2), np.int64)
        return np.stack([self._keys // self.n, self._keys % self.n], axis=1)

    def __len__(self) -> int:
        return int(self._keys.shape[0])

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for x, y in self.pairs:
            yield int(x), int(y)

    def __contains__(self, pair) -> bool:
        x, y = pair
        k = int(x) * self.n + int(y)
        i = np.searchsorted(self._keys, k)
        return bool(i < len(self._keys) and self._keys[i] == k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ControlledSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._keys, other._keys)

    def __hash__(self) -> int:
        return hash((self.n, self._keys.tobytes()))

    def __repr__(self) -> str:
        shown = ", ".join(f"({x},{y})" for x, y in list(self)[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"ControlledSet(n={self.n}, {{{shown}{more}}})"

    def _check(self, other: "ControlledSet") -> None:
        if not isinstance(other, ControlledSet):
            raise DomainError("expected a ControlledSet")
        if other.n != self.n:
            raise DomainError(f"controlled sets live on different spaces ({self.n} vs {other.n} points)")

    # -- set algebra ------------------------------------------------------
    def union(self, *others: "ControlledSet") -> "ControlledSet":
        for o in others:
            self._check(o)
        return ControlledSet._from_keys(self.n, np.concatenate([self._keys, *(o._keys for o in others)]))

    __or__ = union

    def intersection(self, other: "ControlledSet") -> "ControlledSet":
        self._check(other)
        return ControlledSet._from_keys(self.n, np.intersect1d(self._keys, other._keys, assume_unique=True))

    __and__ = intersection

    def difference(self, other: "ControlledSet") -> "ControlledSet":
        self._check(other)
        return ControlledSet._from_keys(self.n, np.setdiff1d(self._keys, other._keys, assume_unique=True))

    __sub__ = difference

    def issubset(self, other: "ControlledSet") -> bool:
        self._check(other)
        return bool(np.isin(self._keys, other._keys, assume_unique=True).all())

    __le__ = issubset

    def missing_from(self, other: "ControlledSet") -> list[tuple[int, int]]:
        """Pairs of ``self`` not contained in ``other``."""
        return list(self.difference(other))

    # -- coarse calculus ------------------------------------------------------
    def to_matrix(self, dtype=np.int64) -> sp.csr_matrix:
        p = self.pairs
        return sp.csr_matrix((np.ones(len(p), dtype), (p[:, 0], p[:, 1])), shape=(self.n, self.n))

    def compose(self, other: "ControlledSet") -> "ControlledSet":
        """``{(x, y) : (x, z) in self and (z, y) in other for some z}``."""
        self._check(other)
        prod = (self.to_matrix() @ other.to_matrix()).tocoo()
        return ControlledSet._from_keys(self.n, prod.row.astype(np.int64) * self.n + prod.col)

    __matmul__ = compose

    def inverse(self) -> "ControlledSet":
        p = self.pairs
        return ControlledSet._from_keys(self.n, p[:, 1] * self.n + p[:, 0])

    def power(self, k: int) -> "ControlledSet":
        """The ``k``-fold composition; only ``k >= 1`` is defined."""
        if int(k) != k or k < 1:
            raise DomainError(f"power is defined for integers k >= 1, got {k!r}")
        out = self
        for _ in range(int(k) - 1):
            out = out.compose(self)
        return out

    def diag_part(self) -> "ControlledSet":
        p = self.pairs
        return ControlledSet._from_keys(self.n, self._keys[p[:, 0] == p[:, 1]])

    def off_diagonal(self) -> "ControlledSet":
        p = self.pairs
        return ControlledSet._from_keys(self.n, self._keys[p[:, 0] != p[:, 1]])

    def symmetrised(self) -> "ControlledSet":
        return self.union(self.inverse())

    def is_symmetric(self) -> bool:
        return self == self.inverse()

    def contains_diagonal(self) -> bool:
        return ControlledSet.diagonal(self.n).issubset(self)

    def bounded_geometry_constant(self) -> int:
        """``max_x |{y : (x, y) in E or (y, x) in E}|``; ``0`` for the empty set."""
        if len(self) == 0:
            return 0
        sym = self.symmetrised()
        return int(np.bincount(sym.pairs[:, 0], minlength=self.n).max())

    def is_elementary(self) -> bool:
        p = self.pairs
        return len(np.unique(p[:, 0])) == len(p) and len(np.unique(p[:, 1])) == len(p)

    def as_translation(self) -> "PartialTranslation":
        """The partial translation ``t`` with ``graph(t) = self`` (pairs ``(t(x), x)``)."""
        if not self.is_elementary():
            raise DomainError("controlled set is not elementary")
        p = self.pairs
        return PartialTranslation(self.n, p[:, 1], p[:, 0])

    def to_json(self) -> dict:
        return {"pairs": [[int(x), int(y)] for x, y in self.pairs]}


def compose(E: ControlledSet, F: ControlledSet) -> ControlledSet:
    return E.compose(F)


def inverse(E: ControlledSet) -> ControlledSet:
    return E.inverse()


def power(E: ControlledSet, n: int) -> ControlledSet:
    return E.power(n)


def bounded_geometry_constant(E: ControlledSet) -> int:
    return E.bounded_geometry_constant()


def is_generated_within(F: ControlledSet, E: ControlledSet, n_max: int) -> int | None:
    """Smallest ``k <= n_max`` with ``F`` contained in ``E^{∘k}``, or ``None``."""
    E._check(F)
    if len(F) == 0:
        return 1 if n_max >= 1 else None
    P = E
    for k in range(1, int(n_max) + 1):
        if F.issubset(P):
            return k
        if len(P) == 0:
            return None
        nxt = P.compose(E)
        if nxt == P:
            return None
        P = nxt
    return None


class PartialTranslation:
    """A bijection ``t: A -> B`` between point sets of an ``n``-point space.

    The graph follows the matrix convention: ``graph(t) = {(t(x), x) : x in A}``.
    """

    __slots__ = ("n", "domain", "image")

    def __init__(self, n: int, domain, image):
        domain = np.asarray(domain, dtype=np.int64).reshape(-1)
        image = np.asarray(image, dtype=np.int64).reshape(-1)
        if domain.shape != image.shape:
            raise DomainError("domain and image must have equal length")
        if domain.size and (min(domain.min(), image.min()) < 0 or max(domain.max(), image.max()) >= n):
            raise DomainError(f"points must lie in [0, {n})")
        order = np.argsort(domain, kind="stable")
        domain, image = domain[order], image[order]
        if np.unique(domain).size != domain.size:
            raise DomainError("partial translation domain has repeated points")
        if np.unique(image).size != image.size:
            raise DomainError("partial translation is not injective")
        self.n = int(n)
        self.domain = _frozen(domain)
        self.image = _frozen(image)

    @classmethod
    def from_mapping(cls, n: int, mapping: dict[int, int]) -> "PartialTranslation":
        items = sorted((int(a), int(b)) for a, b in mapping.items())
        return cls(n, [a for a, _ in items], [b for _, b in items])

    @classmethod
    def identity(cls, n: int, points) -> "PartialTranslation":
        pts = np.asarray(list(points), dtype=np.int64)
        return cls(n, pts, pts)

    @property
    def range(self) -> np.ndarray:
        return np.sort(self.image)

    def __len__(self) -> int:
        return int(self.domain.shape[0])

    def __call__(self, x: int) -> int:
        i = np.searchsorted(self.domain, x)
        if i >= len(self.domain) or self.domain[i] != x:
            raise KeyError(x)
        return int(self.image[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialTranslation):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.domain, other.domain)
            and np.array_equal(self.image, other.image)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.domain.tobytes(), self.image.tobytes()))

    def __repr__(self) -> str:
        shown = ", ".join(f"{a}->{b}" for a, b in list(self.items())[:6])
        return f"PartialTranslation(n={self.n}, {{{shown}{', ...' if len(self) > 6 else ''}}})"

    def items(self) -> Iterator[tuple[int, int]]:
        for a, b in zip(self.domain, self.image):
            yield int(a), int(b)

    def as_dict(self) -> dict[int, int]:
        return dict(self.items())

    def graph(self) -> ControlledSet:
        return ControlledSet._from_keys(self.n, self.image * self.n + self.domain)

    def inverse(self) -> "PartialTranslation":
        return PartialTranslation(self.n, self.image, self.domain)

    def restrict(self, points) -> "PartialTranslation":
        keep = np.isin(self.domain, np.asarray(list(points), dtype=np.int64))
        return PartialTranslation(self.n, self.domain[keep], self.image[keep])

    def compose(self, other: "PartialTranslation") -> "PartialTranslation":
        """``self ∘ other`` on the points where it is defined."""
        if other.n != self.n:
            raise DomainError("partial translations live on different spaces")
        pos = np.searchsorted(self.domain, other.image)
        pos = np.minimum(pos, max(len(self.domain) - 1, 0))
        ok = (len(self.domain) > 0) & (self.domain[pos] == other.image) if len(self.domain) else np.zeros(len(other), bool)
        return PartialTranslation(self.n, other.domain[ok], self.image[pos[ok]])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.domain, self.image))

    def fixed_points(self) -> np.ndarray:
        return self.domain[self.domain == self.image]

    def is_antisymmetric(self) -> bool:
        return not np.intersect1d(self.domain, self.image).size

    def to_json(self) -> dict:
        return {"domain": [int(a) for a in self.domain], "image": [int(b) for b in self.image]}


@dataclass(frozen=True, eq=False)
class CoarseSpace:
    """Finite point set with a component partition and a generating set.

    ``gen`` is always stored symmetrised and with the diagonal added.
    """

    component: np.ndarray
    gen: ControlledSet

    def __post_init__(self):
        comp = np.asarray(self.component, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "component", _frozen(comp))
        gen = self.gen
        if gen.n != comp.shape[0]:
            raise DomainError("generating set and component labels disagree on the number of points")
        gen = gen.union(gen.inverse(), ControlledSet.diagonal(gen.n))
        object.__setattr__(self, "gen", gen)
        if comp.size:
            labels = np.unique(comp)
            if not np.array_equal(labels, np.arange(labels.size)):
                raise DomainError("component labels must be 0..m-1")
            p = gen.pairs
            bad = comp[p[:, 0]] != comp[p[:, 1]]
            if bad.any():
                x, y = p[np.argmax(bad)]
                raise DomainError(f"generating pair ({x},{y}) joins different components")
            # each declared component must be gen-connected
            nc, lab = connected_components(gen.to_matrix(), directed=False)
            if nc != labels.size:
                first = [int(np.flatnonzero(comp == c)[0]) for c in labels]
                split = [int(c) for c, x in zip(labels, first) if np.any(lab[comp == c] != lab[x])]
                raise DomainError(f"components {split} are not connected under the generating set")

    # -- construction ---------------------------------------------------------
    @classmethod
    def from_components(cls, components: Iterable[tuple[int, Iterable[tuple[int, int]]]]) -> "CoarseSpace":
        """Build from ``(size, edges)`` per component with local 0-based vertex ids."""
        labels, pairs = [], []
        offset = 0
        for c, (size, edges) in enumerate(components):
            size = int(size)
            if size < 1:
                raise DomainError(f"component {c} must have at least one point")
            for e in edges:
                i, j = (int(v) for v in e)
                if not (0 <= i < size and 0 <= j < size):
                    raise DomainError(f"edge ({i},{j}) out of range for component {c} of size {size}")
                pairs.append((offset + i, offset + j))
            labels.extend([c] * size)
            offset += size
        return cls(np.asarray(labels, dtype=np.int64), ControlledSet(offset, pairs))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "CoarseSpace":
        """A graph on ``n`` vertices; components are its connected components."""
        E = ControlledSet(n, list(edges))
        sym = E.union(E.inverse(), ControlledSet.diagonal(n))
        _, lab = connected_components(sym.to_matrix(), directed=False)
        # relabel by first occurrence so component order follows point ids
        _, first = np.unique(lab, return_index=True)
        order = np.argsort(first)
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        return cls(remap[lab], E)

    @classmethod
    def disjoint_union(cls, spaces: Iterable["CoarseSpace"]) -> "CoarseSpace":
        comps = []
        for s in spaces:
            for c in range(s.n_components):
                comps.append(s.component_graph(c))
        return cls.from_components(comps)

    @classmethod
    def from_json(cls, data: dict) -> "CoarseSpace":
        try:
            comps = data["components"]
            return cls.from_components((c["size"], c.get("edges", [])) for c in comps)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed space description: {exc!r}") from exc

    def to_json(self) -> dict:
        out = []
        for c in range(self.n_components):
            size, edges = self.component_graph(c)
            out.append({"size": size, "edges": [list(e) for e in edges]})
        return {"components": out}

    # -- queries ----------------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.component.shape[0])

    @property
    def n_components(self) -> int:
        return int(self.component.max()) + 1 if self.n else 0

    @property
    def points(self) -> list[Point]:
        return [Point(i, int(c)) for i, c in enumerate(self.component)]

    def component_points(self, c: int) -> np.ndarray:
        if not 0 <= c < self.n_components:
            raise DomainError(f"no component {c}")
        return np.flatnonzero(self.component == c)

    def component_sizes(self) -> np.ndarray:
        return np.bincount(self.component, minlength=self.n_components)

    def component_graph(self, c: int) -> tuple[int, list[tuple[int, int]]]:
        """``(size, edges)`` of component ``c`` in local ids, each undirected edge once."""
        pts = self.component_points(c)
        local = {int(p): i for i, p in enumerate(pts)}
        edges = [(local[x], local[y]) for x, y in self.gen.off_diagonal() if x < y and x in local]
        return len(pts), edges

    def coarse_components(self) -> np.ndarray:
        """Component labels recomputed from the transitive closure of ``gen``."""
        _, lab = connected_components(self.gen.to_matrix(), directed=False)
        return lab

    def adjacency(self) -> sp.csr_matrix:
        """Off-diagonal part of ``gen`` as a CSR 0/1 matrix."""
        return self.gen.off_diagonal().to_matrix()

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency().indptr)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def component_adjacency(self, c: int) -> sp.csr_matrix:
        pts = self.component_points(c)
        return self.adjacency()[pts][:, pts].tocsr()

    def distances(self, c: int | None = None) -> np.ndarray:
        """Gen-distances; within component ``c`` (local ids) or globally (``-1`` = infinite)."""
        adj = self.adjacency() if c is None else self.component_adjacency(c)
        adj.sort_indices()
        return _kernels.bfs_distances(adj.indptr, adj.indices)

    def ball_sizes(self, r: int) -> np.ndarray:
        d = self.distances()
        return ((d >= 0) & (d <= r)).sum(axis=1)

    def gen_power(self, k: int) -> ControlledSet:
        """``gen^{∘k}`` computed from BFS distances."""
        if k < 1:
            raise DomainError("power is defined for k >= 1")
        d = self.distances()
        x, y = np.nonzero((d >= 0) & (d <= k))
        return ControlledSet._from_keys(self.n, x.astype(np.int64) * self.n + y)

    def same_component(self, E: ControlledSet) -> bool:
        p = E.pairs
        return bool(np.all(self.component[p[:, 0]] == self.component[p[:, 1]]))

    def check_pairs(self, E: ControlledSet) -> None:
        if E.n != self.n:
            raise DomainError("controlled set does not live on this space")
        if not self.same_component(E):
            raise PreconditionError("controlled set joins points of different components")
