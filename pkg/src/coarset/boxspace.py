"""Box spaces: Cayley graphs of a tower of finite quotients of one group.

Three families are supported:

* ``cyclic``: quotients ``Z/m`` of ``Z`` with ``S = {+1, -1}``;
* ``sl2``: ``SL(2, p)`` for a list of primes, generated by the images of
  ``A = [[1,1],[0,1]]``, ``B = [[1,0],[1,1]]`` and their inverses;
* ``permutation``: explicit permutation groups, one generator list per level.

Edges use right multiplication: ``(x, y)`` is an edge iff ``x^{-1} y ∈ S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import TranslationOp
from .errors import DomainError, PreconditionError
from .space import CoarseSpace, ControlledSet
from .spectral import Laplacian, laplacian


@dataclass
class FiniteGroup:
    """A finite group given by canonically sorted elements and a product."""

    elements: list
    identity: Hashable
    mul: Callable
    inv: Callable
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {g: i for i, g in enumerate(self.elements)}

    @property
    def order(self) -> int:
        return len(self.elements)

    @classmethod
    def generated_by(cls, gens: Sequence, identity, mul, inv, key=None) -> "FiniteGroup":
        """Close ``gens`` under right multiplication, starting from the identity."""
        seen = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for g in frontier:
                for s in gens:
                    h = mul(g, s)
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            frontier = nxt
        return cls(sorted(seen, key=key), identity, mul, inv)


def cyclic_group(m: int) -> FiniteGroup:
    if m < 1:
        raise DomainError("cyclic modulus must be positive")
    return FiniteGroup(list(range(m)), 0, lambda a, b: (a + b) % m, lambda a: (-a) % m)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p**0.5) + 1))


def sl2_generators(p: int) -> list[tuple[int, int, int, int]]:
    A = (1, 1, 0, 1)
    B = (1, 0, 1, 1)
    Ai = (1, p - 1, 0, 1)
    Bi = (1, 0, p - 1, 1)
    return [A, Ai, B, Bi]


def sl2_group(p: int) -> FiniteGroup:
    """``SL(2, p)`` with elements ``(a, b, c, d)`` (row-major residues)."""
    if not _is_prime(p):
        raise DomainError(f"{p} is not prime")

    def mul(x, y):
        a, b, c, d = x
        e, f, g, h = y
        return ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)

    def inv(x):
        a, b, c, d = x
        return (d % p, (-b) % p, (-c) % p, a % p)

    return FiniteGroup.generated_by(sl2_generators(p), (1, 0, 0, 1), mul, inv)


def permutation_group(gens: Sequence[Sequence[int]]) -> FiniteGroup:
    gens = [tuple(int(v) for v in g) for g in gens]
    if not gens:
        raise DomainError("permutation family needs at least one generator")
    k = len(gens[0])
    for g in gens:
        if len(g) != k or sorted(g) != list(range(k)):
            raise DomainError(f"{list(g)} is not a permutation of 0..{k - 1}")

    def mul(x, y):  # (x y)(i) = x(y(i))
        return tuple(x[i] for i in y)

    def inv(x):
        out = [0] * len(x)
        for i, v in enumerate(x):
            out[v] = i
        return tuple(out)

    return FiniteGroup.generated_by(gens + [inv(g) for g in gens], tuple(range(k)), mul, inv)


@dataclass
class Quotient:
    group: FiniteGroup
    S: list  # raw images of the generating set, in presentation order
    S_n: list  # distinct non-identity images, canonically ordered

    @property
    def injective(self) -> bool:
        return len(set(self.S)) == len(self.S) and self.group.identity not in self.S


def _quotient(group: FiniteGroup, S: Sequence) -> Quotient:
    imgs = list(S)
    distinct = sorted({s for s in imgs if s != group.identity}, key=group.index.__getitem__)
    inv = {group.inv(s) for s in distinct}
    if inv != set(distinct):
        raise DomainError("generating set is not symmetric")
    return Quotient(group, imgs, distinct)


@dataclass
class FiniteGroupPresentation:
    kind: str  # "cyclic" | "sl2" | "permutation"
    params: list

    def __post_init__(self):
        if self.kind not in ("cyclic", "sl2", "permutation"):
            raise DomainError(f"unknown family {self.kind!r}")
        if self.kind == "cyclic":
            ms = [int(m) for m in self.params]
            if any(m < 1 for m in ms):
                raise DomainError("cyclic moduli must be positive")
            for a, b in zip(ms, ms[1:]):
                if b % a:
                    raise DomainError(f"cyclic tower is not nested: {a} does not divide {b}")
            self.params = ms
        elif self.kind == "sl2":
            ps = [int(p) for p in self.params]
            for p in ps:
                if not _is_prime(p):
                    raise DomainError(f"{p} is not prime")
            if any(b <= a for a, b in zip(ps, ps[1:])):
                raise DomainError("sl2 primes must be strictly increasing")
            self.params = ps

    @property
    def depth(self) -> int:
        return len(self.params)

    def quotient(self, k: int) -> Quotient:
        if not 0 <= k < self.depth:
            raise DomainError(f"no level {k} in a tower of depth {self.depth}")
        if self.kind == "cyclic":
            m = self.params[k]
            return _quotient(cyclic_group(m), [1 % m, (-1) % m])
        if self.kind == "sl2":
            p = self.params[k]
            return _quotient(sl2_group(p), sl2_generators(p))
        gens = [tuple(g) for g in self.params[k]]
        G = permutation_group(gens)
        # S is the given set closed under inverses; involutions appear once
        return _quotient(G, list(dict.fromkeys(gens + [G.inv(g) for g in gens])))

    def describe(self) -> dict:
        return {"family": self.kind, "params": self.params}


def _right_translation_matrix(group: FiniteGroup, s) -> sp.csr_matrix:
    """``ρ(s)`` with ``ρ(s)_{x, xs} = 1``, so ``(ρ(s)ξ)(x) = ξ(xs)``."""
    n = group.order
    cols = np.fromiter((group.index[group.mul(g, s)] for g in group.elements), np.int64, n)
    return sp.csr_matrix((np.ones(n, np.int64), (np.arange(n), cols)), shape=(n, n))


def cayley_graph(group: FiniteGroup, S: Sequence) -> CoarseSpace:
    """Connected right Cayley graph; refuses non-symmetric or non-generating ``S``."""
    q = _quotient(group, S)
    n = group.order
    pairs = []
    for s in q.S_n:
        m = _right_translation_matrix(group, s).tocoo()
        pairs.append(np.stack([m.row, m.col], axis=1))
    E = ControlledSet(n, np.concatenate(pairs) if pairs else np.zeros((0, 2), np.int64))
    space = CoarseSpace.from_edges(n, E)
    if space.n_components != 1:
        raise PreconditionError(f"S generates a proper subgroup ({space.n_components} cosets)")
    return space


@dataclass
class BoxSpace:
    presentation: FiniteGroupPresentation
    quotients: list[Quotient]
    components: list[CoarseSpace]
    space: CoarseSpace

    @property
    def sizes(self) -> list[int]:
        return [c.n for c in self.components]

    def metadata(self) -> dict:
        return {
            **self.presentation.describe(),
            "sizes": self.sizes,
            "generator_images_injective": [q.injective for q in self.quotients],
            "nesting": "verified divisibility" if self.presentation.kind == "cyclic" else "not literal (family variant)",
        }


def box_space(presentation: FiniteGroupPresentation, depth: int | None = None) -> BoxSpace:
    depth = presentation.depth if depth is None else int(depth)
    if depth < 1:
        raise DomainError("box space needs depth >= 1")
    if depth > presentation.depth:
        raise DomainError(f"tower has only {presentation.depth} levels")
    quotients = [presentation.quotient(k) for k in range(depth)]
    comps = [cayley_graph(q.group, q.S) for q in quotients]
    return BoxSpace(presentation, quotients, comps, CoarseSpace.disjoint_union(comps))


def group_laplacian_image(presentation: FiniteGroupPresentation, k: int) -> TranslationOp:
    """Image of ``Σ_{s∈S} (1 - [s])`` under right translation on level ``k``.

    The sum runs over the generators of the covering group, so generators that
    collide in the quotient are counted with multiplicity. The result equals the
    graph Laplacian of level ``k`` exactly when the quotient is injective on ``S``.
    """
    q = presentation.quotient(k)
    n = q.group.order
    total = sp.csr_matrix((n, n), dtype=np.int64)
    eye = sp.identity(n, dtype=np.int64, format="csr")
    for s in q.S:
        total = total + (eye - _right_translation_matrix(q.group, s))
    total.eliminate_zeros()
    return TranslationOp(total)


def component_laplacian(presentation: FiniteGroupPresentation, k: int) -> Laplacian:
    q = presentation.quotient(k)
    return laplacian(cayley_graph(q.group, q.S).gen)


def left_translation_is_automorphism(group: FiniteGroup, space: CoarseSpace, g) -> bool:
    """Relabelling ``x -> g x`` preserves the Cayley graph exactly."""
    perm = np.fromiter((group.index[group.mul(g, x)] for x in group.elements), np.int64, group.order)
    A = space.adjacency()
    P = sp.csr_matrix((np.ones(group.order, np.int64), (perm, np.arange(group.order))), shape=A.shape)
    return (P @ A @ P.T - A).nnz == 0
