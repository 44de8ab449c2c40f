"""Translation operators: finite matrices with controlled support.

Operators wrap a ``scipy.sparse`` CSR matrix. Partial translations and
Laplacians keep an ``int64`` dtype so their identities can be checked exactly;
anything mixed with floats is promoted to ``complex128``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .decomp import elementary_decomposition
from .errors import DomainError
from .space import CoarseSpace, ControlledSet, PartialTranslation


class TranslationOp:
    __slots__ = ("matrix", "space")

    def __init__(self, matrix, space: CoarseSpace | None = None):
        m = sp.csr_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise DomainError("translation operators are square")
        m.eliminate_zeros()
        m.sum_duplicates()
        m.sort_indices()
        if space is not None:
            if space.n != m.shape[0]:
                raise DomainError("operator size does not match the space")
            coo = m.tocoo()
            if np.any(space.component[coo.row] != space.component[coo.col]):
                raise DomainError("operator support joins different components")
        self.matrix = m
        self.space = space

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dtype(self):
        return self.matrix.dtype

    @classmethod
    def identity(cls, n: int, space: CoarseSpace | None = None) -> "TranslationOp":
        return cls(sp.identity(n, dtype=np.int64, format="csr"), space)

    @classmethod
    def zeros(cls, n: int, space: CoarseSpace | None = None) -> "TranslationOp":
        return cls(sp.csr_matrix((n, n), dtype=np.int64), space)

    @classmethod
    def diagonal(cls, values, space: CoarseSpace | None = None) -> "TranslationOp":
        values = np.asarray(values)
        return cls(sp.diags(values, format="csr"), space)

    @classmethod
    def indicator(cls, n: int, points, space: CoarseSpace | None = None) -> "TranslationOp":
        d = np.zeros(n, np.int64)
        d[np.asarray(list(points), dtype=np.int64)] = 1
        return cls.diagonal(d, space)

    @classmethod
    def from_dense(cls, a, space: CoarseSpace | None = None) -> "TranslationOp":
        return cls(sp.csr_matrix(np.asarray(a)), space)

    @classmethod
    def from_triplets(cls, n: int, triplets, space: CoarseSpace | None = None) -> "TranslationOp":
        """``[[x, y, re, im], ...]`` entries, duplicates summed."""
        arr = np.asarray(triplets, dtype=float).reshape(-1, 4)
        x, y = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64)
        if arr.size and (x.min() < 0 or y.min() < 0 or max(x.max(), y.max()) >= n):
            raise DomainError(f"operator entries must lie in [0, {n})")
        vals = arr[:, 2] + 1j * arr[:, 3]
        return cls(sp.csr_matrix((vals, (x, y)), shape=(n, n)), space)

    def _check(self, other: "TranslationOp") -> None:
        if not isinstance(other, TranslationOp):
            raise DomainError("expected a TranslationOp")
        if other.n != self.n:
            raise DomainError(f"operators act on different spaces ({self.n} vs {other.n} points)")

    def _wrap(self, m, other: "TranslationOp | None" = None) -> "TranslationOp":
        space = self.space if self.space is not None else (other.space if other is not None else None)
        return TranslationOp(m, space)

    # -- algebra ------------------------------------------------------------
    def matmul(self, other: "TranslationOp") -> "TranslationOp":
        self._check(other)
        return self._wrap(self.matrix @ other.matrix, other)

    __matmul__ = matmul

    def add(self, other: "TranslationOp") -> "TranslationOp":
        self._check(other)
        return self._wrap(self.matrix + other.matrix, other)

    __add__ = add

    def sub(self, other: "TranslationOp") -> "TranslationOp":
        self._check(other)
        return self._wrap(self.matrix - other.matrix, other)

    __sub__ = sub

    def scale(self, c) -> "TranslationOp":
        return self._wrap(self.matrix * c)

    def __neg__(self) -> "TranslationOp":
        return self.scale(-1)

    def adjoint(self) -> "TranslationOp":
        return self._wrap(self.matrix.conj().T.tocsr())

    @property
    def H(self) -> "TranslationOp":
        return self.adjoint()

    def apply(self, xi) -> np.ndarray:
        xi = np.asarray(xi)
        if xi.shape[0] != self.n:
            raise DomainError("vector length does not match the operator")
        return self.matrix @ xi

    def support(self) -> ControlledSet:
        return ControlledSet.from_matrix(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def equals(self, other: "TranslationOp", tol: float = 0.0) -> bool:
        self._check(other)
        diff = (self.matrix - other.matrix)
        if diff.nnz == 0:
            return True
        return bool(np.abs(diff.data).max() <= tol)

    def max_deviation(self, other: "TranslationOp") -> float:
        self._check(other)
        diff = self.matrix - other.matrix
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, TranslationOp):
            return NotImplemented
        return self.n == other.n and self.equals(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"TranslationOp(n={self.n}, nnz={self.matrix.nnz}, dtype={self.dtype})"

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def diagonal_values(self) -> np.ndarray:
        return self.matrix.diagonal()

    def to_json(self) -> dict:
        coo = self.matrix.tocoo()
        vals = coo.data.astype(complex)
        return {
            "triplets": [
                [int(x), int(y), float(v.real), float(v.imag)] for x, y, v in zip(coo.row, coo.col, vals)
            ]
        }


def matmul(S: TranslationOp, T: TranslationOp) -> TranslationOp:
    return S.matmul(T)


def add(S: TranslationOp, T: TranslationOp) -> TranslationOp:
    return S.add(T)


def adjoint(T: TranslationOp) -> TranslationOp:
    return T.adjoint()


def apply(T: TranslationOp, xi) -> np.ndarray:
    return T.apply(xi)


def from_partial_translation(t: PartialTranslation, space: CoarseSpace | None = None) -> TranslationOp:
    """0/1 operator with ``v[x, y] = 1`` iff ``t(y) = x``."""
    m = sp.csr_matrix((np.ones(len(t), np.int64), (t.image, t.domain)), shape=(t.n, t.n))
    return TranslationOp(m, space)


def phi(T: TranslationOp) -> TranslationOp:
    """Diagonal operator of row sums."""
    return T._wrap(sp.diags(np.asarray(T.matrix.sum(axis=1)).ravel(), format="csr"))


def _bipartite_edge_colouring(pairs: list[tuple[int, int]]) -> list[int]:
    """Proper edge colouring of a bipartite multigraph-free edge list with Δ colours.

    Left vertices are first coordinates, right vertices second coordinates.
    Uses the alternating-path recolouring argument behind König's theorem.
    """
    left: dict[int, dict[int, int]] = {}
    right: dict[int, dict[int, int]] = {}
    deg = {}
    for x, y in pairs:
        deg[("L", x)] = deg.get(("L", x), 0) + 1
        deg[("R", y)] = deg.get(("R", y), 0) + 1
    delta = max(deg.values(), default=0)
    colour_of: dict[tuple[int, int], int] = {}
    for x, y in pairs:
        lx = left.setdefault(x, {})
        ry = right.setdefault(y, {})
        a = next(c for c in range(delta) if c not in lx)
        b = next(c for c in range(delta) if c not in ry)
        if a != b and a in ry:
            # swap colours a and b along the alternating path starting at y
            path = []
            side, v, c = "R", y, a
            while True:
                table = right if side == "R" else left
                if c not in table.get(v, {}):
                    break
                w = table[v][c]
                path.append((side, v, w, c))
                side, v, c = ("L" if side == "R" else "R"), w, (b if c == a else a)
            for side, v, w, c in path:
                table, other = (right, left) if side == "R" else (left, right)
                del table[v][c]
                del other[w][c]
            for side, v, w, c in path:
                table, other = (right, left) if side == "R" else (left, right)
                nc = b if c == a else a
                table[v][nc] = w
                other[w][nc] = v
                key = (w, v) if side == "R" else (v, w)
                colour_of[key] = nc
        lx[a] = y
        ry[a] = x
        colour_of[(x, y)] = a
    return [colour_of[p] for p in pairs]


def standard_form(T: TranslationOp) -> list[tuple[np.ndarray, PartialTranslation]]:
    """Terms ``(f_i, v_i)`` with ``T = Σ diag(f_i) v_i`` and ``f_i`` living on ``range(v_i)``.

    The support is edge-coloured as a bipartite graph (rows against columns), so
    the number of terms is the maximal row or column fill, at most ``N(supp T)``.
    """
    coo = T.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows, cols, vals = coo.row[order], coo.col[order], coo.data[order]
    pairs = list(zip(rows.tolist(), cols.tolist()))
    colours = np.asarray(_bipartite_edge_colouring(pairs), dtype=np.int64)
    out = []
    for c in range(int(colours.max()) + 1 if colours.size else 0):
        sel = colours == c
        f = np.zeros(T.n, dtype=vals.dtype)
        f[rows[sel]] = vals[sel]
        out.append((f, PartialTranslation(T.n, cols[sel], rows[sel])))
    return out


def reassemble(terms, n: int) -> TranslationOp:
    total = sp.csr_matrix((n, n), dtype=complex)
    for f, v in terms:
        total = total + sp.diags(f) @ from_partial_translation(v).matrix
    return TranslationOp(total)


def constant_defect(xi, E: ControlledSet) -> float:
    """``max ‖(vv* − v)ξ‖`` over the elementary pieces of ``E ∪ E^{-1}`` and their inverses."""
    xi = np.asarray(xi)
    if xi.shape[0] != E.n:
        raise DomainError("vector length does not match the space")
    F = E.symmetrised()
    dec = elementary_decomposition(F, ControlledSet(E.n))
    best = 0.0
    for piece in dec.elementary_pairs:
        for t in (piece, piece.inverse()):
            v = from_partial_translation(t)
            r = (v @ v.adjoint() - v).apply(xi)
            best = max(best, float(np.linalg.norm(r)))
    return best
