"""Laplacians of controlled sets, their spectra and expansion diagnostics."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .algebra import TranslationOp, from_partial_translation
from .decomp import elementary_decomposition
from .errors import DomainError, InvariantViolation, NotGeneratingError, PreconditionError
from .space import CoarseSpace, ControlledSet, PartialTranslation, is_generated_within

DENSE_MAX = 4096
CLAMP_TOL = 1e-9
EXACT_CHEEGER_MAX = 24


@dataclass(frozen=True, eq=False)
class Laplacian:
    op: TranslationOp
    source: ControlledSet

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.op.matrix

    @property
    def n(self) -> int:
        return self.op.n

    def toarray(self) -> np.ndarray:
        return self.op.toarray()

    def quadratic_form(self, xi) -> float:
        xi = np.asarray(xi)
        return float(np.real(np.vdot(xi, self.matrix @ xi)))


def laplacian(E: ControlledSet) -> Laplacian:
    """``D - A`` for the off-diagonal part of ``E ∪ E^{-1}``."""
    P = E.symmetrised().off_diagonal()
    A = P.to_matrix(np.int64)
    deg = np.asarray(A.sum(axis=1)).ravel()
    return Laplacian(TranslationOp(sp.diags(deg, format="csr", dtype=np.int64) - A), E)


def elementary_laplacian(t: PartialTranslation) -> TranslationOp:
    """``vv* + v*v - v - v*`` for the operator ``v`` of ``t``."""
    v = from_partial_translation(t)
    return v @ v.adjoint() + v.adjoint() @ v - v - v.adjoint()


def defect_square(t: PartialTranslation) -> TranslationOp:
    """``(vv* - v)*(vv* - v)``."""
    v = from_partial_translation(t)
    w = v @ v.adjoint() - v
    return w.adjoint() @ w


@dataclass(frozen=True, eq=False)
class SumDecomposition:
    base: Laplacian
    pieces: tuple[PartialTranslation, ...]
    elementary: tuple[Laplacian, ...]

    def total(self) -> TranslationOp:
        out = self.base.op
        for L in self.elementary:
            out = out + L.op
        return out


def laplacian_sum_decomposition(E: ControlledSet, F: ControlledSet) -> SumDecomposition:
    """``Δ^F = Δ^E + Σ Δ^{E_i}`` with antisymmetric elementary ``E_i``."""
    E._check(F)
    if not E.issubset(F):
        x, y = E.difference(F).pairs[0]
        raise DomainError(f"E is not contained in F: ({x},{y})")
    Fp = F.symmetrised().off_diagonal()
    Ep = E.symmetrised().off_diagonal()
    dec = elementary_decomposition(Fp, Ep)
    return SumDecomposition(
        laplacian(E), dec.elementary_pairs, tuple(laplacian(v.graph()) for v in dec.elementary_pairs)
    )


# ---------------------------------------------------------------------------
# spectra


@dataclass
class ComponentSpectrum:
    index: int
    size: int
    eigenvalues: np.ndarray
    kernel_dim: int
    gap: float | None  # smallest nonzero eigenvalue; None if there is none
    method: str = "dense"  # "dense" or "extremal only"

    def to_json(self) -> dict:
        return {
            "component": self.index,
            "size": self.size,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "kernel_dim": self.kernel_dim,
            "gap": self.gap,
            "method": self.method,
        }


@dataclass
class SpectralReport:
    components: list[ComponentSpectrum]
    tol_eig: float
    verdict: dict | None = None
    sigma_max_available: bool = field(default=False, init=False)

    @property
    def kernel_dim(self) -> int:
        return sum(c.kernel_dim for c in self.components)

    @property
    def min_gap(self) -> float | None:
        gaps = [c.gap for c in self.components if c.gap is not None]
        return min(gaps) if gaps else None

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([c.eigenvalues for c in self.components]))

    def to_json(self) -> dict:
        return {
            "components": [c.to_json() for c in self.components],
            "kernel_dim": self.kernel_dim,
            "min_gap": self.min_gap,
            "verdict": self.verdict,
            "sigma_max_available": False,
            "tol_eig": self.tol_eig,
        }


def _check_symmetric(m: sp.csr_matrix) -> None:
    d = m - m.T
    if d.nnz and np.abs(d.data).max() > 0:
        raise InvariantViolation("Laplacian is not symmetric")


def _clamp(vals: np.ndarray) -> np.ndarray:
    if vals.size and vals.min() < -CLAMP_TOL:
        raise InvariantViolation(f"Laplacian eigenvalue {vals.min():.3e} is negative beyond tolerance")
    return np.where(vals < 0, 0.0, vals)


def _zero_threshold(vals: np.ndarray, tol_eig: float) -> float:
    top = float(vals.max()) if vals.size else 0.0
    return tol_eig * max(1.0, top)


def _extremal(m: sp.csr_matrix, k: int = 6) -> np.ndarray:
    """A few smallest eigenvalues and the largest, via Lanczos on ``bound*I - L``."""
    n = m.shape[0]
    bound = float(2 * np.abs(m.diagonal()).max()) or 1.0
    shifted = (sp.identity(n, format="csr") * bound - m).astype(float)
    v0 = np.ones(n) / math.sqrt(n) + np.linspace(0, 1e-3, n)
    top = spla.eigsh(shifted, k=k, which="LA", v0=v0, tol=1e-12, ncv=max(4 * k, 40), return_eigenvectors=False)
    small = np.sort(bound - top)
    big = spla.eigsh(m.astype(float), k=1, which="LA", v0=v0, tol=1e-12, return_eigenvectors=False)
    return np.concatenate([small, big])


def _component_spectrum(idx: int, m: sp.csr_matrix, tol_eig: float, dense_max: int) -> ComponentSpectrum:
    n = m.shape[0]
    if n <= dense_max or n < 10:
        vals = sla.eigvalsh(m.toarray().astype(float)) if n else np.zeros(0)
        method = "dense"
    else:
        vals = _extremal(m)
        method = "extremal only"
    vals = _clamp(np.sort(vals))
    thr = _zero_threshold(vals, tol_eig)
    zero = np.abs(vals) <= thr
    nonzero = vals[~zero]
    return ComponentSpectrum(
        idx, n, vals, int(zero.sum()), float(nonzero.min()) if nonzero.size else None, method
    )


def _component_labels(L: Laplacian, space: CoarseSpace | None) -> np.ndarray:
    if space is not None:
        if space.n != L.n:
            raise DomainError("Laplacian and space have different sizes")
        return space.component
    _, lab = connected_components(L.matrix, directed=False)
    return lab


def spectrum(
    L: Laplacian,
    space: CoarseSpace | None = None,
    tol_eig: float = 1e-8,
    dense_max: int = DENSE_MAX,
    jobs: int = 1,
) -> SpectralReport:
    """Per-component spectrum of ``L`` on ℓ²; components come from ``space`` if given."""
    m = L.matrix
    _check_symmetric(m)
    lab = _component_labels(L, space)
    ncomp = int(lab.max()) + 1 if lab.size else 0
    blocks = []
    for c in range(ncomp):
        pts = np.flatnonzero(lab == c)
        blocks.append(m[pts][:, pts].tocsr())

    def work(c):
        return _component_spectrum(c, blocks[c], tol_eig, dense_max)

    if jobs > 1 and ncomp > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            comps = list(ex.map(work, range(ncomp)))
    else:
        comps = [work(c) for c in range(ncomp)]
    return SpectralReport(comps, tol_eig)


# ---------------------------------------------------------------------------
# kernel equals constants


@dataclass
class KernelCheck:
    ok: bool
    kernel_dim: int
    n_components: int
    max_deviation: float
    witness: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "kernel_dim": self.kernel_dim,
            "n_components": self.n_components,
            "max_deviation": self.max_deviation,
            "witness": None if self.witness is None else [float(x) for x in self.witness],
        }


def _kernel_vectors(m: sp.csr_matrix, tol_eig: float, dense_max: int) -> np.ndarray:
    n = m.shape[0]
    if n <= dense_max:
        vals, vecs = sla.eigh(m.toarray().astype(float))
    else:
        bound = float(2 * m.diagonal().max()) or 1.0
        shifted = (sp.identity(n, format="csr") * bound - m).astype(float)
        v0 = np.ones(n) + np.linspace(0, 1e-3, n)
        top, vecs = spla.eigsh(shifted, k=4, which="LA", v0=v0, tol=1e-12)
        vals = bound - top
    vals = _clamp(vals)
    thr = tol_eig * max(1.0, float(vals.max()))
    return vecs[:, np.abs(vals) <= thr]


def kernel_is_constants(
    L: Laplacian, space: CoarseSpace, tol: float = 1e-8, tol_eig: float = 1e-8, dense_max: int = DENSE_MAX
) -> KernelCheck:
    """Check that ``ker L`` is exactly the span of the component indicators."""
    E = L.source
    if E.n != space.n:
        raise DomainError("Laplacian and space have different sizes")
    reach = E.union(ControlledSet.diagonal(E.n))
    if is_generated_within(space.gen, reach, max(space.n, 1)) is None:
        _, lab = connected_components(reach.to_matrix(), directed=False)
        x, y = next((x, y) for x, y in space.gen if lab[x] != lab[y])
        raise NotGeneratingError(
            f"the Laplacian's controlled set does not generate the space: ({x},{y}) is never reached"
        )
    m = L.matrix
    _check_symmetric(m)
    dim = 0
    worst = 0.0
    witness = None
    ok = True
    for c in range(space.n_components):
        pts = space.component_points(c)
        vecs = _kernel_vectors(m[pts][:, pts].tocsr(), tol_eig, dense_max)
        dim += vecs.shape[1]
        if vecs.shape[1] != 1:
            ok = False
            if witness is None and vecs.shape[1] > 1:
                # a kernel vector orthogonal to constants is a witness
                q = vecs - vecs.mean(axis=0, keepdims=True)
                j = int(np.argmax(np.linalg.norm(q, axis=0)))
                witness = np.zeros(space.n)
                witness[pts] = vecs[:, j]
            continue
        v = vecs[:, 0]
        dev = float(np.abs(v - v.mean()).max())
        worst = max(worst, dev)
        if dev > tol:
            ok = False
            if witness is None:
                witness = np.zeros(space.n)
                witness[pts] = v
    return KernelCheck(ok and dim == space.n_components, dim, space.n_components, worst, witness)


# ---------------------------------------------------------------------------
# expander verdicts


def expander_verdict(
    spaces: Sequence[CoarseSpace],
    c: float,
    degree_bound: int | None = None,
    tol_eig: float = 1e-8,
    reports: Sequence[SpectralReport] | None = None,
    jobs: int = 1,
) -> dict:
    """Finite-prefix evidence for the three expander conditions.

    (i) sizes grow: every size is eventually exceeded within the prefix.
    (ii) degrees are bounded: by ``degree_bound`` if given, otherwise the second
    half of the prefix never exceeds the maximal degree of the first half.
    (iii) every nonzero ℓ² eigenvalue is at least ``c``.
    """
    if len(spaces) == 0:
        raise DomainError("expander verdict needs a non-empty sequence")
    if c <= 0:
        raise DomainError("gap threshold c must be positive")
    for k, s in enumerate(spaces):
        if s.n_components != 1:
            raise PreconditionError(f"sequence member {k} has {s.n_components} components, expected 1")
    if reports is None:
        reports = [spectrum(laplacian(s.gen), s, tol_eig=tol_eig, jobs=jobs) for s in spaces]
    sizes = [s.n for s in spaces]
    degrees = [s.max_degree() for s in spaces]
    gaps = [r.min_gap for r in reports]

    grow = len(sizes) >= 2 and all(max(sizes[k + 1:]) > sizes[k] for k in range(len(sizes) - 1))
    if degree_bound is not None:
        bounded = all(d <= degree_bound for d in degrees)
    else:
        half = (len(degrees) + 1) // 2
        bounded = max(degrees[half:], default=0) <= max(degrees[:half])
    fail_gap = next((k for k, g in enumerate(gaps) if g is not None and g < c), None)
    finite_gaps = [g for g in gaps if g is not None]
    return {
        "evidence_only": True,
        "c": c,
        "sizes": sizes,
        "max_degrees": degrees,
        "gaps": gaps,
        "min_gap": min(finite_gaps) if finite_gaps else None,
        "i_sizes_grow": grow,
        "ii_degrees_bounded": bounded,
        "iii_gap_at_least_c": fail_gap is None,
        "first_gap_failure": fail_gap,
        "expander": bool(grow and bounded and fail_gap is None),
        "failing": [name for name, ok in (("i", grow), ("ii", bounded), ("iii", fail_gap is None)) if not ok],
    }


# ---------------------------------------------------------------------------
# edge expansion


@dataclass
class CheegerResult:
    value: float
    exact: bool
    subset: np.ndarray  # local vertex ids of a minimising (or sweep) subset

    def to_json(self) -> dict:
        return {
            "h": self.value,
            "mode": "exact" if self.exact else "sweep upper bound",
            "subset": [int(v) for v in self.subset],
        }


def _sweep(adj: sp.csr_matrix) -> tuple[float, np.ndarray]:
    n = adj.shape[0]
    deg = np.asarray(adj.sum(axis=1)).ravel()
    L = sp.diags(deg) - adj
    if n <= DENSE_MAX:
        _, vecs = sla.eigh(L.toarray().astype(float), subset_by_index=[0, 1])
        f = vecs[:, 1]
    else:
        bound = float(2 * deg.max())
        shifted = (sp.identity(n) * bound - L).astype(float)
        _, vecs = spla.eigsh(shifted, k=2, which="LA", v0=np.linspace(1, 2, n), tol=1e-10)
        f = vecs[:, 0]
    order = np.lexsort((np.arange(n), f))
    pos = np.empty(n, np.int64)
    pos[order] = np.arange(n)
    coo = adj.tocoo()
    # an edge (u, w) with pos[u] < pos[w] is cut for prefixes k in (pos[u], pos[w]]
    lo = np.minimum(pos[coo.row], pos[coo.col])
    hi = np.maximum(pos[coo.row], pos[coo.col])
    delta = np.zeros(n + 1, np.int64)
    np.add.at(delta, lo + 1, 1)
    np.add.at(delta, hi + 1, -1)
    cut = np.cumsum(delta)[1:n] // 2  # each undirected edge appears twice
    k = np.arange(1, n)
    ratio = cut / np.minimum(k, n - k)
    j = int(np.argmin(ratio))
    size = j + 1
    S = order[:size] if size <= n - size else order[size:]
    return float(ratio[j]), np.sort(S)


def cheeger(space: CoarseSpace, component: int = 0, exact_max: int = EXACT_CHEEGER_MAX) -> CheegerResult:
    """``min |∂S| / |S|`` over ``0 < |S| <= n/2``; exact up to ``exact_max`` vertices."""
    adj = space.component_adjacency(component)
    n = adj.shape[0]
    if n < 2:
        return CheegerResult(math.inf, True, np.zeros(0, np.int64))
    if n <= exact_max:
        dense = adj.toarray() > 0
        mask = (dense.astype(np.int64) << np.arange(n, dtype=np.int64)[None, :]).sum(axis=1)
        cut, size, best = _kernels.cheeger_exact(mask, dense.sum(axis=1))
        subset = np.flatnonzero((best >> np.arange(n)) & 1)
        return CheegerResult(cut / size, True, subset)
    value, subset = _sweep(adj)
    return CheegerResult(value, False, subset)
