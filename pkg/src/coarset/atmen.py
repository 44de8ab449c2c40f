"""Finite-scale tools around negative-type kernels on graph sequences.

Girth, negative-type and Schoenberg checks, annulus matchings (permutations
that move every vertex a distance in ``(r, s]``), and the kernel-weighted
forms ``⟨⟨S, T⟩⟩_t(x) = Σ_{y,z} conj(S[x,y]) T[x,z] k_t(y,z)`` averaged over a
component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import _kernels
from .errors import DomainError, InvariantViolation, PreconditionError
from .space import CoarseSpace
from .spectral import laplacian

PSD_TOL = 1e-9


def girth(space: CoarseSpace, component: int = 0, backend: str | None = None) -> float:
    """Shortest cycle length of a component; ``inf`` for trees."""
    adj = space.component_adjacency(component)
    adj.sort_indices()
    g = _kernels.girth(adj.indptr, adj.indices, backend=backend)
    return math.inf if g < 0 else g


# ---------------------------------------------------------------------------
# kernels


@dataclass
class Kernel:
    """Per-component kernel matrices in local vertex order."""

    kind: str
    matrices: list[np.ndarray]
    params: dict = field(default_factory=dict)

    def on(self, component: int) -> np.ndarray:
        return self.matrices[component]

    def exp(self, component: int, t: float) -> np.ndarray:
        return np.exp(-t * self.matrices[component])


def distance_kernel(space: CoarseSpace) -> Kernel:
    return Kernel("distance", [space.distances(c).astype(float) for c in range(space.n_components)])


def truncated_kernel(space: CoarseSpace, cap: float | None = None) -> Kernel:
    """``min(d(x, y), cap)``; ``cap`` defaults to girth/3 per component (no cap for trees)."""
    mats, caps = [], []
    for c in range(space.n_components):
        d = space.distances(c).astype(float)
        cc = cap if cap is not None else girth(space, c) / 3
        caps.append(cc)
        mats.append(np.minimum(d, cc))
    return Kernel("truncated", mats, {"caps": caps})


def embedding_kernel(points: list[np.ndarray]) -> Kernel:
    """Squared Euclidean distances of per-component point clouds."""
    mats = []
    for f in points:
        f = np.asarray(f, dtype=float)
        sq = (f * f).sum(axis=1)
        mats.append(np.maximum(sq[:, None] + sq[None, :] - 2 * f @ f.T, 0.0))
        np.fill_diagonal(mats[-1], 0.0)
    return Kernel("embedding", mats)


def explicit_kernel(matrices: list) -> Kernel:
    return Kernel("explicit", [np.asarray(m, dtype=float) for m in matrices])


@dataclass
class NegativeTypeReport:
    valid: bool
    symmetric: bool
    nonnegative: bool
    zero_diagonal: bool
    min_centred_eig: float
    band_profile: list[float] | None = None

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "symmetric": self.symmetric,
            "nonnegative": self.nonnegative,
            "zero_diagonal": self.zero_diagonal,
            "min_centred_eig": self.min_centred_eig,
            "band_profile": self.band_profile,
        }


def negative_type_check(k, distances: np.ndarray | None = None, tol: float = PSD_TOL) -> NegativeTypeReport:
    """Normalised, symmetric, non-negative and conditionally negative definite.

    Negative type is tested through the centred Gram matrix ``-½ P k P`` with
    ``P = I - 11ᵀ/m``: it must be positive semidefinite. With ``distances`` the
    properness surrogate ``c_r = min{k(x,y) : d(x,y) > r}`` is also reported.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DomainError("kernel must be a square matrix")
    m = k.shape[0]
    scale = max(1.0, float(np.abs(k).max())) if m else 1.0
    sym = bool(np.allclose(k, k.T, rtol=0, atol=tol * scale))
    nonneg = bool(np.all(k >= -tol * scale))
    zdiag = bool(np.all(np.abs(np.diag(k)) <= tol * scale))
    if m:
        P = np.eye(m) - 1.0 / m
        ks = (k + k.T) / 2
        mineig = float(np.linalg.eigvalsh(-0.5 * P @ ks @ P).min())
    else:
        mineig = 0.0
    profile = None
    if distances is not None:
        d = np.asarray(distances)
        top = int(d.max()) if d.size else 0
        profile = [float(k[d > r].min()) for r in range(top)]
    valid = sym and nonneg and zdiag and mineig >= -tol * scale
    return NegativeTypeReport(valid, sym, nonneg, zdiag, mineig, profile)


def schoenberg(k, t: float, tol: float = PSD_TOL) -> tuple[np.ndarray, float]:
    """``exp(-t k)`` and its smallest eigenvalue; refuses kernels not of negative type."""
    if t <= 0:
        raise DomainError("t must be positive")
    rep = negative_type_check(k, tol=tol)
    if not rep.valid:
        raise PreconditionError(
            f"kernel is not of negative type (min centred eigenvalue {rep.min_centred_eig:.3e})"
        )
    K = np.exp(-t * np.asarray(k, dtype=float))
    mineig = float(np.linalg.eigvalsh((K + K.T) / 2).min()) if K.size else 0.0
    if mineig < -tol:
        raise InvariantViolation(f"exponentiated kernel has eigenvalue {mineig:.3e}")
    return K, mineig


# ---------------------------------------------------------------------------
# annulus matchings


@dataclass
class AnnulusMatching:
    component: int
    r: int
    s: int
    s_bound: int  # smallest s with floor(s/3) - r >= N(E^{∘r})
    sigma: np.ndarray  # local ids
    displacement: np.ndarray

    def verify(self) -> bool:
        m = self.sigma.shape[0]
        return bool(
            np.array_equal(np.sort(self.sigma), np.arange(m))
            and np.all(self.displacement > self.r)
            and np.all(self.displacement <= self.s)
        )

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "r": self.r,
            "s": self.s,
            "s_bound": self.s_bound,
            "sigma": [int(v) for v in self.sigma],
            "max_displacement": int(self.displacement.max()) if self.displacement.size else 0,
        }


def proof_bound(ball_max: int, r: int) -> int:
    """Smallest ``s`` with ``floor(s/3) - r >= ball_max``."""
    return 3 * (r + ball_max)


def _perfect_matching(d: np.ndarray, r: int, s: int) -> np.ndarray | None:
    band = (d > r) & (d <= s)
    match = maximum_bipartite_matching(csr_matrix(band), perm_type="column")
    return None if np.any(match < 0) else match


def annulus_matching(space: CoarseSpace, component: int, r: int) -> AnnulusMatching:
    """A permutation moving every vertex a gen-distance in ``(r, s]`` for the least such ``s``."""
    if r < 0:
        raise DomainError("r must be non-negative")
    d = space.distances(component).astype(np.int64)
    diam = int(d.max()) if d.size else 0
    ball = int(((d >= 0) & (d <= r)).sum(axis=1).max()) if d.size else 0
    bound = proof_bound(ball, r)
    if diam <= r:
        raise PreconditionError(f"component {component} has diameter {diam} <= r = {r}")
    for s in range(r + 1, diam + 1):
        sigma = _perfect_matching(d, r, s)
        if sigma is not None:
            disp = d[np.arange(d.shape[0]), sigma]
            out = AnnulusMatching(component, r, s, bound, sigma, disp)
            if not out.verify():
                raise InvariantViolation("matching does not respect the band")
            return out
    raise PreconditionError(f"no permutation of component {component} moves every vertex beyond distance {r}")


def hall_check(
    space: CoarseSpace, component: int, r: int, s: int, rng: np.random.Generator, samples: int = 50
) -> int:
    """Number of sampled independent sets of the band graph violating ``|N(C)| >= |C|``."""
    d = space.distances(component)
    band = (d > r) & (d <= s)
    m = band.shape[0]
    bad = 0
    for _ in range(samples):
        chosen = np.zeros(m, bool)
        blocked = np.zeros(m, bool)
        for v in rng.permutation(m):
            if not blocked[v]:
                chosen[v] = True
                blocked |= band[v]
                blocked[v] = True
            if rng.random() < 0.05:
                break
        nbrs = band[chosen].any(axis=0)
        if nbrs.sum() < chosen.sum():
            bad += 1
    return bad


# ---------------------------------------------------------------------------
# forms and states


def form_evaluate(S: np.ndarray, T: np.ndarray, Kt: np.ndarray) -> np.ndarray:
    """``⟨⟨S, T⟩⟩_t(x)`` for dense component blocks ``S``, ``T`` and ``Kt = exp(-t k)``."""
    S = np.asarray(S)
    T = np.asarray(T)
    if S.shape != T.shape or S.shape != Kt.shape:
        raise DomainError("operators and kernel must be blocks over the same component")
    return np.einsum("xy,yz,xz->x", S.conj(), Kt, T)


def state(f: np.ndarray) -> complex:
    """Normalised trace of a diagonal function over one component."""
    f = np.asarray(f)
    return f.mean() if f.size else 0.0


def witness_expectation(space: CoarseSpace, kernel: Kernel, t: float, component: int) -> float:
    """``(1/|X_n|) Σ_{x,y ∈ X_n} Δ[x,y] k_t(x,y)`` for the gen Laplacian of the component."""
    pts = space.component_points(component)
    L = laplacian(space.gen).matrix[pts][:, pts].toarray().astype(float)
    Kt = kernel.exp(component, t)
    return float((L * Kt).sum() / len(pts))


def witness_sweep(space: CoarseSpace, kernel: Kernel, ts) -> list[tuple[int, float, float]]:
    return [(c, float(t), witness_expectation(space, kernel, t, c)) for c in range(space.n_components) for t in ts]
