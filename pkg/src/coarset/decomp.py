"""Decompositions of partial translations and controlled sets.

Three constructions, each deterministic:

* :func:`tripartition` splits a fixed-point-free partial translation into at
  most three pieces whose domains are disjoint from their images.
* :func:`elementary_decomposition` peels a symmetric controlled set into a
  given symmetric subset, a diagonal part and antisymmetric elementary pieces.
* :func:`factor_through` writes a partial translation whose graph lies in a
  power ``E^{∘n}`` as a finite union of chains of ``n`` steps inside ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DomainError, InvariantViolation, PreconditionError
from .space import ControlledSet, PartialTranslation


# ---------------------------------------------------------------------------
# three-part splitting


@dataclass(frozen=True)
class Tripartition:
    t: PartialTranslation
    parts: tuple[np.ndarray, np.ndarray, np.ndarray]

    def pieces(self) -> list[PartialTranslation]:
        """Restrictions of ``t`` to the three parts (possibly empty)."""
        return [self.t.restrict(p) for p in self.parts]

    def labels(self) -> dict[int, int]:
        return {int(x): i for i, p in enumerate(self.parts) for x in p}

    def is_valid(self) -> bool:
        dom = np.sort(np.concatenate(self.parts))
        if not np.array_equal(dom, self.t.domain):
            return False
        return all(piece.is_antisymmetric() for piece in self.pieces())

    def to_json(self) -> dict:
        return {"parts": [[int(x) for x in p] for p in self.parts]}


def _orbits(t: PartialTranslation) -> list[tuple[list[int], bool]]:
    """Orbits of a partial injection as ``(points, is_cycle)``.

    Chains list every point ``b, t(b), ..., t^k(b)`` starting at a point with no
    preimage; cycles start at their minimum id.
    """
    fwd = t.as_dict()
    back = {b: a for a, b in fwd.items()}
    seen: set[int] = set()
    out = []
    # chains first: start points are in the domain but not in the image
    for a in sorted(fwd):
        if a in back or a in seen:
            continue
        chain = [a]
        while chain[-1] in fwd:
            chain.append(fwd[chain[-1]])
        seen.update(chain)
        out.append((chain, False))
    for a in sorted(fwd):
        if a in seen:
            continue
        cyc = [a]
        while fwd[cyc[-1]] != a:
            cyc.append(fwd[cyc[-1]])
        seen.update(cyc)
        out.append((cyc, True))
    return out


def tripartition(t: PartialTranslation) -> Tripartition:
    """Split the domain of a fixed-point-free ``t`` into ``B0, B1, B2``.

    Along a cycle ``b, t(b), ..., t^n(b)`` (``b`` its minimum id) the point
    ``t^i(b)`` goes to ``B_{i mod 2}``, except that the last point of a cycle
    with ``n`` even goes to ``B2``. Along a chain, parity is measured from the
    chain's minimum-id domain point.
    """
    fixed = t.fixed_points()
    if fixed.size:
        raise PreconditionError(f"partial translation fixes point {int(fixed[0])}")
    parts: list[list[int]] = [[], [], []]
    for pts, is_cycle in _orbits(t):
        if is_cycle:
            n = len(pts) - 1
            for i, p in enumerate(pts):
                parts[2 if (n % 2 == 0 and i == n) else i % 2].append(p)
        else:
            dom = pts[:-1]  # the chain's last point has no image
            i0 = int(np.argmin(dom))
            for i, p in enumerate(dom):
                parts[(i - i0) % 2].append(p)
    return Tripartition(t, tuple(np.array(sorted(p), dtype=np.int64) for p in parts))


# ---------------------------------------------------------------------------
# elementary decomposition


@dataclass(frozen=True)
class ElementaryDecomposition:
    total: ControlledSet
    base: ControlledSet
    diag_part: ControlledSet
    elementary_pairs: tuple[PartialTranslation, ...]
    rounds: int = 0

    def pieces(self) -> list[ControlledSet]:
        """``base``, ``diag_part`` and every ``E_i``, ``E_i^{-1}`` in order."""
        out = [self.base, self.diag_part]
        for v in self.elementary_pairs:
            g = v.graph()
            out.extend([g, g.inverse()])
        return out

    def reassembles(self) -> bool:
        """Exact disjoint-union check against the decomposed set."""
        pieces = self.pieces()
        keys = np.concatenate([p.keys for p in pieces]) if pieces else np.zeros(0, np.int64)
        return keys.size == len(self.total) and np.array_equal(np.sort(keys), self.total.keys)

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json()["pairs"],
            "diag_part": self.diag_part.to_json()["pairs"],
            "elementary_pairs": [v.to_json() for v in self.elementary_pairs],
            "rounds": self.rounds,
        }


def _greedy_round(pairs: np.ndarray) -> np.ndarray:
    """Mask of a maximal elementary subset ``S`` with ``S ∩ S^{-1} = ∅``, lex order."""
    used_first: set[int] = set()
    used_second: set[int] = set()
    taken: set[tuple[int, int]] = set()
    mask = np.zeros(len(pairs), bool)
    for k, (x, y) in enumerate(pairs.tolist()):
        if x in used_first or y in used_second or (y, x) in taken:
            continue
        used_first.add(x)
        used_second.add(y)
        taken.add((x, y))
        mask[k] = True
    return mask


def elementary_decomposition(F: ControlledSet, E: ControlledSet) -> ElementaryDecomposition:
    """Decompose symmetric ``F ⊇ E`` as ``E ⊔ diag(F∖E) ⊔ ⊔(E_i ⊔ E_i^{-1})``.

    Each round takes a maximal elementary antisymmetric-in-pairs subset of what
    remains, scanning pairs lexicographically; each round is then split into up
    to three antisymmetric pieces.
    """
    F._check(E)
    if not F.is_symmetric() or not E.is_symmetric():
        raise DomainError("elementary decomposition needs symmetric controlled sets")
    if not E.issubset(F):
        x, y = E.difference(F).pairs[0]
        raise DomainError(f"base set is not contained in F: ({x},{y})")
    rest = F.difference(E)
    diag = rest.diag_part()
    rest = rest.off_diagonal()
    pieces: list[PartialTranslation] = []
    rounds = 0
    while len(rest):
        pairs = rest.pairs
        S = ControlledSet._from_keys(F.n, rest.keys[_greedy_round(pairs)])
        rounds += 1
        for piece in tripartition(S.as_translation()).pieces():
            if len(piece):
                pieces.append(piece)
        rest = rest.difference(S.union(S.inverse()))
    return ElementaryDecomposition(F, E, diag, tuple(pieces), rounds)


# ---------------------------------------------------------------------------
# factorisation through powers


@dataclass(frozen=True)
class Factorisation:
    t: PartialTranslation
    E: ControlledSet
    n: int
    blocks: tuple[tuple[np.ndarray, tuple[PartialTranslation, ...]], ...]
    chains: np.ndarray = field(repr=False)  # (|A|, n+1) chain points r_j(x)

    def recompose(self, i: int) -> PartialTranslation:
        """``s^n ∘ ... ∘ s^1`` for block ``i`` (``s^1`` applied first)."""
        _, chain = self.blocks[i]
        out = chain[0]
        for s in chain[1:]:
            out = s.compose(out)
        return out

    def violations(self) -> list[str]:
        """Every broken factorisation property, as readable messages."""
        msgs = []
        dom = np.sort(np.concatenate([a for a, _ in self.blocks])) if self.blocks else np.zeros(0, np.int64)
        if not np.array_equal(dom, self.t.domain):
            msgs.append("blocks do not partition the domain")
        for i, (A, chain) in enumerate(self.blocks):
            if len(chain) != self.n:
                msgs.append(f"block {i}: chain has {len(chain)} factors")
                continue
            if chain[0].domain.tolist() != A.tolist():
                msgs.append(f"block {i}: first factor domain differs from block")
            for j, s in enumerate(chain):
                if not s.graph().issubset(self.E):
                    msgs.append(f"block {i}: factor {j + 1} leaves E")
                if not (s.is_identity() or s.is_antisymmetric()):
                    msgs.append(f"block {i}: factor {j + 1} is neither identity nor antisymmetric")
                if j + 1 < len(chain) and not np.array_equal(s.range, chain[j + 1].domain):
                    msgs.append(f"block {i}: range of factor {j + 1} is not the next domain")
            if self.recompose(i) != self.t.restrict(A):
                msgs.append(f"block {i}: recomposition differs from t")
        return msgs

    def is_valid(self) -> bool:
        return not self.violations()

    @property
    def m(self) -> int:
        return len(self.blocks)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "blocks": [
                {"domain": [int(a) for a in A], "chain": [s.to_json() for s in chain]}
                for A, chain in self.blocks
            ],
        }


def _csr(E: ControlledSet) -> sp.csr_matrix:
    m = E.to_matrix().tocsr()
    m.sort_indices()
    return m


def _chains(t: PartialTranslation, E: ControlledSet, n: int) -> np.ndarray:
    """Chain points ``r_0(x), ..., r_n(x)`` with ``(r_j, r_{j-1}) ∈ E``."""
    M = _csr(E)  # row w lists u with (w, u) in E, i.e. steps u -> w arrive at w
    Mt = _csr(E.inverse())  # row u lists w with (w, u) in E, i.e. steps leaving u
    A, B = t.domain, t.image
    out = np.empty((len(A), n + 1), np.int64)
    with_diag = E.contains_diagonal()
    if with_diag:
        # dist[T, u] = number of steps from u to T
        dist = _kernels.bfs_distances(M.indptr, M.indices, sources=B)
    for k, (x, target) in enumerate(zip(A.tolist(), B.tolist())):
        if with_diag:
            d = dist[k]
            if d[x] < 0 or d[x] > n:
                raise PreconditionError(f"pair ({target},{x}) of graph(t) is not in E^(∘{n})")
            u, j = x, 0
            out[k, 0] = x
            while u != target:
                nbrs = Mt.indices[Mt.indptr[u]:Mt.indptr[u + 1]]
                u = int(nbrs[d[nbrs] == d[u] - 1][0])
                j += 1
                out[k, j] = u
            out[k, j + 1:] = target
        else:
            # layers[j] marks points from which target is reachable in exactly n - j steps
            layers = np.zeros((n + 1, E.n), bool)
            layers[n, target] = True
            for j in range(n, 0, -1):
                layers[j - 1] = (layers[j].astype(np.int64) @ M) > 0
            if not layers[0, x]:
                raise PreconditionError(f"pair ({target},{x}) of graph(t) is not in E^(∘{n})")
            u = x
            out[k, 0] = x
            for j in range(1, n + 1):
                nbrs = Mt.indices[Mt.indptr[u]:Mt.indptr[u + 1]]
                u = int(nbrs[layers[j, nbrs]][0])
                out[k, j] = u
    return out


def _refine(block: np.ndarray, prev: np.ndarray, cur: np.ndarray) -> list[np.ndarray]:
    """Split ``block`` (row indices) so each piece is a valid single step."""
    still = block[prev[block] == cur[block]]
    moving = block[prev[block] != cur[block]]
    classes: list[tuple[list[int], set[int], set[int]]] = []  # rows, images, sources
    for r in moving.tolist():
        a, b = int(prev[r]), int(cur[r])
        for rows, imgs, srcs in classes:
            if b not in imgs and b not in srcs and a not in imgs:
                rows.append(r)
                imgs.add(b)
                srcs.add(a)
                break
        else:
            classes.append(([r], {b}, {a}))
    out = [still] if still.size else []
    out.extend(np.array(rows, dtype=np.int64) for rows, _, _ in classes)
    return out


def factor_through(t: PartialTranslation, E: ControlledSet, n: int) -> Factorisation:
    """Factor ``t`` through ``n`` steps inside ``E``; needs ``graph(t) ⊆ E^{∘n}``."""
    if int(n) != n or n < 1:
        raise DomainError("factorisation length must be an integer n >= 1")
    n = int(n)
    if t.n != E.n:
        raise DomainError("partial translation and controlled set live on different spaces")
    R = _chains(t, E, n)
    blocks = [np.arange(len(t), dtype=np.int64)] if len(t) else []
    for j in range(1, n + 1):
        blocks = [piece for b in blocks for piece in _refine(b, R[:, j - 1], R[:, j])]
    out = []
    for b in sorted(blocks, key=lambda rows: int(R[rows, 0].min())):
        order = np.argsort(R[b, 0])
        b = b[order]
        chain = tuple(PartialTranslation(E.n, R[b, j - 1], R[b, j]) for j in range(1, n + 1))
        out.append((np.asarray(R[b, 0]), chain))
    fac = Factorisation(t, E, n, tuple(out), R)
    bad = fac.violations()
    if bad:
        raise InvariantViolation("; ".join(bad[:3]))
    return fac
