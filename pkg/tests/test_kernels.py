import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarset import _kernels, graphs
from coarset.atmen import girth

BACKENDS = _kernels.BACKENDS


def _csr(space, c=0):
    adj = space.component_adjacency(c)
    adj.sort_indices()
    return adj.indptr, adj.indices


def _masks(space):
    dense = space.component_adjacency(0).toarray() > 0
    n = dense.shape[0]
    return (dense.astype(np.int64) << np.arange(n, dtype=np.int64)[None, :]).sum(axis=1), dense.sum(axis=1)


@st.composite
def small_graphs(draw, max_n=14):
    n = draw(st.integers(1, max_n))
    p = draw(st.floats(0.0, 0.6))
    seed = draw(st.integers(0, 2**31))
    return graphs.random_connected(n, p, seed=seed)


def test_numba_is_available():
    assert "numba" in BACKENDS


def test_unknown_backend():
    indptr, indices = _csr(graphs.cycle(4))
    with pytest.raises(ValueError):
        _kernels.bfs_distances(indptr, indices, backend="cuda")


@given(small_graphs(max_n=40))
def test_bfs_backends_agree(space):
    indptr, indices = _csr(space)
    outs = [_kernels.bfs_distances(indptr, indices, backend=b) for b in BACKENDS]
    for o in outs[1:]:
        assert np.array_equal(o, outs[0])


def test_bfs_sources_and_unreachable():
    U = graphs.disjoint_union([graphs.path(3), graphs.path(2)])
    adj = U.adjacency()
    adj.sort_indices()
    for b in BACKENDS:
        d = _kernels.bfs_distances(adj.indptr, adj.indices, sources=np.array([0, 4]), backend=b)
        assert d.tolist() == [[0, 1, 2, -1, -1], [-1, -1, -1, 1, 0]]


@given(small_graphs(max_n=30))
def test_girth_backends_agree(space):
    indptr, indices = _csr(space)
    vals = {_kernels.girth(indptr, indices, backend=b) for b in BACKENDS}
    assert len(vals) == 1


@given(small_graphs(max_n=12))
def test_cheeger_backends_agree(space):
    mask, deg = _masks(space)
    outs = {_kernels.cheeger_exact(mask, deg, backend=b) for b in BACKENDS}
    assert len(outs) == 1


def test_cheeger_single_point():
    for b in BACKENDS:
        assert _kernels.cheeger_exact(np.zeros(1, np.int64), np.zeros(1, np.int64), backend=b)[1] == -1


def test_env_flag_selects_numpy():
    code = "import coarset._kernels as k; print(k.BACKEND)"
    for value, expected in (("1", "numpy"), ("0", "numba")):
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={"COARSET_DISABLE_NUMBA": value, "PATH": ""},
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == expected


def test_default_backend_used_by_high_level_api(monkeypatch):
    R = graphs.random_regular(24, 3, seed=1)
    ref = girth(R, backend="numpy")
    monkeypatch.setattr(_kernels, "BACKEND", "numpy")
    assert girth(R) == ref
