"""Compression to a coarsely dense subset.

Given a partition ``X = ⊔_{y∈Y} U_y`` with ``y ∈ U_y``, write ``n(x) = |U_{y(x)}|``.
The block-averaging projection ``A`` and the weight ``N = diag(n^{1/2})`` relate
operators on ``X`` and on ``Y``. Everything here is phrased through the
aggregation matrix ``B`` (``|Y| x |X|``, ``B[y, x] = n(y)^{-1/2}`` on ``U_y``):

    A = Bᵀ B,   B Bᵀ = I_Y,   α(T) = B T Bᵀ,   β(S) = Bᵀ S B.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .algebra import TranslationOp, from_partial_translation, phi
from .errors import DomainError
from .space import CoarseSpace, PartialTranslation

MAX_BLOCK = 64


@dataclass(eq=False)
class DensePartition:
    n: int
    Y: np.ndarray  # sorted point ids
    owner: np.ndarray  # owner[x] = position of y(x) in Y
    radius: int | None = None
    sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.int64)
        self.owner = np.asarray(self.owner, dtype=np.int64)
        if self.owner.shape != (self.n,):
            raise DomainError("every point needs an owner")
        if self.Y.size == 0:
            if self.n:
                raise DomainError("Y is empty but X is not")
        elif not np.all(np.diff(self.Y) > 0):
            raise DomainError("Y must be sorted without repeats")
        if self.n and (self.owner.min() < 0 or self.owner.max() >= self.Y.size):
            raise DomainError("owner index out of range")
        if np.any(self.owner[self.Y] != np.arange(self.Y.size)):
            raise DomainError("each y must lie in its own block")
        self.sizes = np.bincount(self.owner, minlength=self.Y.size)

    @property
    def n_of_x(self) -> np.ndarray:
        return self.sizes[self.owner]

    @property
    def y_of_x(self) -> np.ndarray:
        return self.Y[self.owner]

    def blocks(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {int(y): [] for y in self.Y}
        for x, k in enumerate(self.owner):
            out[int(self.Y[k])].append(x)
        return out

    @property
    def max_block(self) -> int:
        return int(self.sizes.max()) if self.sizes.size else 0

    @classmethod
    def from_blocks(cls, n: int, blocks: dict) -> "DensePartition":
        Y = np.array(sorted(int(y) for y in blocks), dtype=np.int64)
        pos = {int(y): i for i, y in enumerate(Y)}
        owner = np.full(n, -1, np.int64)
        for y, pts in blocks.items():
            for x in pts:
                x = int(x)
                if not 0 <= x < n:
                    raise DomainError(f"block point {x} out of range")
                if owner[x] >= 0:
                    raise DomainError(f"point {x} lies in two blocks")
                owner[x] = pos[int(y)]
        if np.any(owner < 0):
            raise DomainError(f"points {np.flatnonzero(owner < 0).tolist()} lie in no block")
        return cls(n, Y, owner)

    def to_json(self) -> dict:
        return {"blocks": {str(y): pts for y, pts in self.blocks().items()}, "radius": self.radius}


def build_partition(space: CoarseSpace, Y, r: int, max_block: int = MAX_BLOCK) -> DensePartition:
    """Assign each point to its nearest ``y`` (ties to the smallest id) within distance ``r``."""
    Y = np.unique(np.asarray(list(Y), dtype=np.int64))
    if space.n and Y.size == 0:
        raise DomainError("Y is empty")
    if Y.size and (Y.min() < 0 or Y.max() >= space.n):
        raise DomainError("Y contains points outside the space")
    adj = space.adjacency()
    adj.sort_indices()
    d = _kernels.bfs_distances(adj.indptr, adj.indices, sources=Y).astype(np.int64)
    d[d < 0] = np.iinfo(np.int64).max
    owner = np.argmin(d, axis=0)  # first minimum = smallest y, as Y is sorted
    dist = d[owner, np.arange(space.n)]
    orphans = np.flatnonzero(dist > r)
    if orphans.size:
        raise DomainError(f"points farther than {r} from Y: {orphans[:20].tolist()}")
    P = DensePartition(space.n, Y, owner, radius=int(dist.max()) if dist.size else 0)
    if P.max_block > max_block:
        raise DomainError(f"block of size {P.max_block} exceeds the cap {max_block}")
    return P


def check_partition(space: CoarseSpace, P: DensePartition) -> int:
    """Largest gen-distance inside a block; refuses blocks that cross components."""
    if P.n != space.n:
        raise DomainError("partition and space have different sizes")
    if np.any(space.component != space.component[P.y_of_x]):
        raise DomainError("a block crosses components")
    worst = 0
    d = space.distances()
    for pts in P.blocks().values():
        worst = max(worst, int(d[np.ix_(pts, pts)].max()))
    return worst


def y_space(space: CoarseSpace, P: DensePartition) -> CoarseSpace:
    """``Y`` with pairs at gen-distance ``<= 2R + 1``, ``R`` the largest owner distance."""
    d = space.distances()
    R = int(d[np.arange(space.n), P.y_of_x].max()) if space.n else 0
    dy = d[np.ix_(P.Y, P.Y)]
    i, j = np.nonzero((dy >= 0) & (dy <= 2 * R + 1))
    return CoarseSpace.from_edges(P.Y.size, list(zip(i.tolist(), j.tolist())))


# ---------------------------------------------------------------------------
# operators


def aggregation(P: DensePartition) -> sp.csr_matrix:
    vals = P.n_of_x.astype(float) ** -0.5
    return sp.csr_matrix((vals, (P.owner, np.arange(P.n))), shape=(P.Y.size, P.n))


@dataclass(eq=False)
class MoritaOperators:
    P: DensePartition
    A: TranslationOp
    N: TranslationOp
    Ninv: TranslationOp
    B: sp.csr_matrix

    @property
    def condition(self) -> float:
        """``‖N‖ ‖N^{-1}‖`` = sqrt(max block / min block)."""
        return float(np.sqrt(self.P.sizes.max() / self.P.sizes.min()))


def morita_operators(P: DensePartition) -> MoritaOperators:
    B = aggregation(P)
    w = P.n_of_x.astype(float)
    return MoritaOperators(
        P,
        TranslationOp((B.T @ B).tocsr()),
        TranslationOp.diagonal(np.sqrt(w)),
        TranslationOp.diagonal(1.0 / np.sqrt(w)),
        B,
    )


def block_deviation(T: TranslationOp, M: MoritaOperators) -> float:
    """``max |ATA - T|``; zero iff ``T`` is block-constant."""
    return (M.A @ T @ M.A).max_deviation(T)


def alpha(T: TranslationOp, M: MoritaOperators, tol: float = 1e-10) -> TranslationOp:
    dev = block_deviation(T, M)
    if dev > tol:
        raise DomainError(f"operator is not block-constant (max |ATA - T| = {dev:.3e})")
    return TranslationOp(M.B @ T.matrix @ M.B.T)


def beta(S: TranslationOp, M: MoritaOperators) -> TranslationOp:
    if S.n != M.P.Y.size:
        raise DomainError("operator over Y has the wrong size")
    return TranslationOp(M.B.T @ S.matrix @ M.B)


def psi_y(T: TranslationOp, M: MoritaOperators, tol: float = 1e-10) -> TranslationOp:
    """``β ∘ Φ_Y ∘ α``."""
    return beta(phi(alpha(T, M, tol)), M)


# ---------------------------------------------------------------------------
# identity suite


def smallsupp_split(t: PartialTranslation, P: DensePartition) -> list[PartialTranslation]:
    """Pieces of ``t`` with at most one domain and one range point per block."""
    used: list[tuple[set, set, list]] = []
    for a, b in t.items():
        ka, kb = int(P.owner[a]), int(P.owner[b])
        for dom, rng, items in used:
            if ka not in dom and kb not in rng:
                dom.add(ka)
                rng.add(kb)
                items.append((a, b))
                break
        else:
            used.append(({ka}, {kb}, [(a, b)]))
    return [PartialTranslation.from_mapping(t.n, dict(items)) for _, _, items in used]


def row_split(T: TranslationOp, P: DensePartition) -> list[TranslationOp]:
    """Pieces of ``T`` with at most one nonzero row per block."""
    coo = T.matrix.tocoo()
    rows = np.unique(coo.row)
    rank = np.zeros(T.n, np.int64)
    seen: dict[int, int] = {}
    for x in rows:
        k = int(P.owner[x])
        rank[x] = seen.get(k, 0)
        seen[k] = rank[x] + 1
    out = []
    for r in range(max(seen.values(), default=0)):
        sel = rank[coo.row] == r
        out.append(TranslationOp(sp.csr_matrix((coo.data[sel], (coo.row[sel], coo.col[sel])), shape=T.matrix.shape)))
    return out


def cad_factors(T: TranslationOp, M: MoritaOperators) -> tuple[TranslationOp, TranslationOp]:
    """``C, D`` with ``T = C A D`` for ``T`` with at most one nonzero row per block.

    ``C[x, u] = 1`` when ``x, u`` share a block and row ``x`` of ``T`` is nonzero;
    ``D = A T``, i.e. ``D[w, z] = n(w)^{-1} Σ_{x ∈ U_{y(w)}} T[x, z]``.
    """
    P = M.P
    nz = np.zeros(P.n, bool)
    nz[np.unique(T.matrix.tocoo().row)] = True
    same = sp.csr_matrix((np.ones(P.n), (P.owner, np.arange(P.n))), shape=(P.Y.size, P.n))
    C = sp.diags(nz.astype(float)) @ (same.T @ same)
    return TranslationOp(C), M.A @ T


def random_partial_translation(space: CoarseSpace, rng: np.random.Generator, density: float = 0.5) -> PartialTranslation:
    """Random partial bijection moving points only within components."""
    dom, img = [], []
    for c in range(space.n_components):
        pts = space.component_points(c)
        k = int(rng.binomial(len(pts), density))
        if k == 0:
            continue
        dom.extend(rng.choice(pts, k, replace=False).tolist())
        img.extend(rng.choice(pts, k, replace=False).tolist())
    return PartialTranslation(space.n, dom, img)


def random_operator(space: CoarseSpace, rng: np.random.Generator, density: float = 0.2) -> TranslationOp:
    """Random complex operator supported inside the component blocks."""
    n = space.n
    mask = (space.component[:, None] == space.component[None, :]) & (rng.random((n, n)) < density)
    vals = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return TranslationOp(sp.csr_matrix(np.where(mask, vals, 0)), space)


def identity_suite(
    space: CoarseSpace, P: DensePartition, rng: np.random.Generator, samples: int = 4
) -> dict[str, float]:
    """Maximum deviations of the averaging identities on random operators."""
    M = morita_operators(P)
    Ysp = y_space(space, P)
    A, N, Ni = M.A, M.N, M.Ninv
    I_X = TranslationOp.identity(P.n)
    I_Y = TranslationOp.identity(P.Y.size)
    dev: dict[str, float] = {}

    def note(key, val):
        dev[key] = max(dev.get(key, 0.0), float(val))

    note("A_selfadjoint", A.max_deviation(A.adjoint()))
    note("A_idempotent", (A @ A).max_deviation(A))
    note("A_commutes_N", (A @ N).max_deviation(N @ A))
    note("phi_A_is_one", phi(A).max_deviation(I_X))
    note("BBt_is_identity", TranslationOp(M.B @ M.B.T).max_deviation(I_Y))
    note("alpha_A_is_identity", alpha(A, M).max_deviation(I_Y))
    for _ in range(samples):
        S1 = random_operator(Ysp, rng)
        S2 = random_operator(Ysp, rng)
        T1 = beta(S1, M)
        T2 = A @ random_operator(space, rng) @ A
        note("alpha_beta_roundtrip", alpha(beta(S1, M), M).max_deviation(S1))
        note("beta_alpha_roundtrip", beta(alpha(T2, M), M).max_deviation(T2))
        note("alpha_multiplicative", alpha(T1 @ T2, M).max_deviation(alpha(T1, M) @ alpha(T2, M)))
        note("alpha_star", alpha(T2.adjoint(), M).max_deviation(alpha(T2, M).adjoint()))
        note("alpha_TstarT", alpha(T2.adjoint() @ T2, M).max_deviation(alpha(T2, M).adjoint() @ alpha(T2, M)))
        note("beta_multiplicative", beta(S1 @ S2, M).max_deviation(beta(S1, M) @ beta(S2, M)))

        # translation over Y: Φ_X(N β(v) N^{-1}) A = β(vv*) A
        v = from_partial_translation(random_partial_translation(Ysp, rng))
        lhs = phi(N @ beta(v, M) @ Ni) @ A
        note("conn_1", lhs.max_deviation(beta(v @ v.adjoint(), M) @ A))
        note("psi_beta_v", psi_y(beta(v, M), M).max_deviation(beta(v @ v.adjoint(), M)))

        # translation over X, split into pieces meeting each block at most once
        t = random_partial_translation(space, rng)
        for piece in smallsupp_split(t, P):
            w = from_partial_translation(piece)
            lhs = psi_y(Ni @ A @ w @ A @ N, M)
            note("conn_2", lhs.max_deviation(A @ w @ w.adjoint() @ A))

        # T = C A D on pieces with one nonzero row per block
        T = random_operator(space, rng)
        for piece in row_split(T, P):
            C, D = cad_factors(piece, M)
            note("cad_reconstruction", (C @ A @ D).max_deviation(piece))
    return dev


def psi_y_explicit(T: np.ndarray, P: DensePartition) -> np.ndarray:
    """``Ψ_Y(T)[x, z] = n(x)^{-3/2} Σ_y Σ_{x' ∈ U_{y(x)}, z' ∈ U_y} n(z')^{-1/2} T[x', z']`` on blocks."""
    n = P.n
    nx = P.n_of_x.astype(float)
    out = np.zeros((n, n), dtype=complex)
    blocks = P.blocks()
    for x in range(n):
        own = blocks[int(P.y_of_x[x])]
        total = sum(T[xp, zp] * nx[zp] ** -0.5 for xp in own for zp in range(n))
        for z in own:
            out[x, z] = nx[x] ** -1.5 * total
    return out


# ---------------------------------------------------------------------------
# ℓ² shadows of the constant-vector correspondence


def _component_constants(space: CoarseSpace) -> np.ndarray:
    """Orthonormal basis of component-constant vectors (columns)."""
    Q = np.zeros((space.n, space.n_components))
    for c in range(space.n_components):
        pts = space.component_points(c)
        Q[pts, c] = 1.0 / np.sqrt(len(pts))
    return Q


def constant_shadow(space: CoarseSpace, P: DensePartition, rng: np.random.Generator, samples: int = 8) -> dict:
    """Numerical checks of how ``N`` carries constants over ``Y`` to constants over ``X``."""
    from .spectral import laplacian  # local import keeps module import order simple

    M = morita_operators(P)
    Ysp = y_space(space, P)
    nx = P.n_of_x.astype(float)
    # kernel over Y pulled back to block-constant vectors on X
    LY = laplacian(Ysp.gen).toarray().astype(float)
    vals, vecs = np.linalg.eigh(LY)
    kerY = vecs[:, np.abs(vals) <= 1e-8 * max(1.0, vals.max())]
    lifted = (M.N.matrix @ (M.B.T @ kerY))
    LX = laplacian(space.gen).matrix
    in_kernel = float(np.abs(LX @ lifted).max()) if lifted.size else 0.0
    rank = int(np.linalg.matrix_rank(lifted)) if lifted.size else 0
    QX = _component_constants(space)
    # H^Y_c: block-constant vectors n(x)^{-1/2} times component constants
    QY = QX * nx[:, None] ** -0.5
    QY, _ = np.linalg.qr(QY)
    kappa = M.condition
    worst_ratio = np.inf
    worst_literal = np.inf
    for _ in range(samples):
        eta = rng.standard_normal(P.Y.size)
        xi = M.B.T @ eta  # block-constant
        xi -= QX @ (QX.T @ xi)  # orthogonal to constants on X
        if np.linalg.norm(xi) < 1e-12:
            continue
        w = xi / nx**0.5  # N^{-1} ξ
        xi2 = w - QY @ (QY.T @ w)
        ratio = np.linalg.norm(xi2) / (np.linalg.norm(w) / np.sqrt(1 + kappa**2))
        worst_ratio = min(worst_ratio, ratio)
        # same bound measured against ‖ξ‖ instead of ‖N^{-1}ξ‖; not guaranteed
        literal = np.linalg.norm(xi2) / (np.linalg.norm(xi) / np.sqrt(1 + kappa**2))
        worst_literal = min(worst_literal, literal)
    return {
        "kernel_dim_Y": int(kerY.shape[1]),
        "kernel_dim_X_constants": int(space.n_components),
        "lifted_rank": rank,
        "lifted_in_kernel": in_kernel,
        "condition": kappa,
        "min_ratio": float(worst_ratio),
        "min_ratio_unscaled": float(worst_literal),
    }
