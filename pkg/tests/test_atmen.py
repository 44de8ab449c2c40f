import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarset import graphs
from coarset.atmen import (
    annulus_matching,
    distance_kernel,
    embedding_kernel,
    explicit_kernel,
    form_evaluate,
    girth,
    hall_check,
    negative_type_check,
    proof_bound,
    schoenberg,
    state,
    truncated_kernel,
    witness_expectation,
    witness_sweep,
)
from coarset.boxspace import FiniteGroupPresentation, box_space
from coarset.errors import DomainError, PreconditionError


def _nx_girth(n, edges):
    G = nx.Graph(edges)
    G.add_nodes_from(range(n))
    cycles = nx.minimum_cycle_basis(G)
    return min((len(c) for c in cycles), default=math.inf)


def test_girth_examples():
    assert girth(graphs.cycle(7)) == 7
    assert girth(graphs.path(6)) == math.inf
    assert girth(graphs.petersen()) == 5
    assert girth(graphs.complete(5)) == 3


def test_girth_against_networkx():
    for seed in range(8):
        R = graphs.random_regular(30, 3, seed=seed)
        n, edges = R.component_graph(0)
        assert girth(R) == _nx_girth(n, edges)


def test_negative_type_examples(rng):
    assert negative_type_check(np.zeros((4, 4))).valid
    f = rng.normal(size=(12, 3))
    assert negative_type_check(embedding_kernel([f]).on(0)).valid
    tree = graphs.random_connected(15, 0.0, seed=1)  # spanning tree only
    assert girth(tree) == math.inf
    assert negative_type_check(tree.distances(0)).valid


def test_negative_type_flags():
    bad = np.array([[0.0, 1.0], [2.0, 0.0]])
    rep = negative_type_check(bad)
    assert not rep.valid and not rep.symmetric
    rep = negative_type_check(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert not rep.nonnegative
    rep = negative_type_check(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert not rep.zero_diagonal
    with pytest.raises(DomainError):
        negative_type_check(np.zeros((2, 3)))


def test_cycle_metric_valid_random_regular_metric_not():
    assert negative_type_check(graphs.cycle(10).distances(0)).valid
    R = graphs.random_regular(40, 3, seed=0)
    rep = negative_type_check(R.distances(0))
    assert not rep.valid
    assert rep.min_centred_eig < -1e-3


def test_band_profile_is_monotone():
    C = graphs.cycle(12)
    d = C.distances(0)
    rep = negative_type_check(d.astype(float), distances=d)
    assert rep.band_profile == [float(r + 1) for r in range(6)]


def test_schoenberg(rng):
    K, mineig = schoenberg(np.zeros((3, 3)), 1.0)
    assert np.array_equal(K, np.ones((3, 3)))
    for _ in range(20):
        f = rng.normal(size=(int(rng.integers(2, 30)), 4))
        k = embedding_kernel([f]).on(0)
        for t in (0.1, 1, 10):
            K, mineig = schoenberg(k, t)
            assert mineig >= -1e-9
            assert np.allclose(np.diag(K), 1.0)


def test_schoenberg_refuses_bad_kernel():
    d = graphs.random_regular(40, 3, seed=0).distances(0)
    with pytest.raises(PreconditionError, match="negative type"):
        schoenberg(d, 1.0)
    with pytest.raises(DomainError):
        schoenberg(np.zeros((2, 2)), 0.0)


def test_annulus_c12():
    C = graphs.cycle(12)
    m = annulus_matching(C, 0, 2)
    assert m.s == 3
    assert m.verify()
    d = C.distances(0)
    assert all(2 < d[x, m.sigma[x]] <= 3 for x in range(12))
    # rotation by three is one valid witness
    rot = [(x + 3) % 12 for x in range(12)]
    assert all(2 < d[x, rot[x]] <= 3 for x in range(12))


def test_annulus_too_small():
    with pytest.raises(PreconditionError):
        annulus_matching(graphs.path(2), 0, 1)
    with pytest.raises(DomainError):
        annulus_matching(graphs.cycle(5), 0, -1)


def test_annulus_random_regular(rng):
    for n in (100, 500):
        R = graphs.random_regular(n, 3, seed=n)
        for r in (2, 3, 4):
            m = annulus_matching(R, 0, r)
            assert m.verify()
            ball = int(R.ball_sizes(r).max())
            assert m.s_bound == proof_bound(ball, r)
            assert hall_check(R, 0, r, m.s, rng, samples=10) == 0


def test_proof_bound_definition():
    for ball in range(1, 10):
        for r in range(5):
            s0 = proof_bound(ball, r)
            assert s0 // 3 - r >= ball
            assert (s0 - 1) // 3 - r < ball


def test_witness_regular_closed_form():
    for S, d in ((graphs.cycle(9), 2), (graphs.petersen(), 3), (graphs.random_regular(30, 4, seed=2), 4)):
        k = distance_kernel(S)
        for t in (0.01, 0.5, 3.0):
            assert abs(witness_expectation(S, k, t, 0) - d * (1 - math.exp(-t))) <= 1e-12


def test_witness_limits():
    P = graphs.petersen()
    zero = explicit_kernel([np.zeros((10, 10))])
    assert witness_expectation(P, zero, 1.0, 0) == 0.0
    assert abs(witness_expectation(P, distance_kernel(P), 1e-12, 0)) <= 1e-9


def test_witness_gap_tension_on_cyclic_tower():
    box = box_space(FiniteGroupPresentation("cyclic", [4, 8, 16, 32, 64]))
    k = distance_kernel(box.space)
    for c, t, value in witness_sweep(box.space, k, [0.1, 1.0]):
        assert value <= 2 * (1 - math.exp(-t)) + 1e-12


def test_truncated_kernel_cap():
    P = graphs.petersen()
    k = truncated_kernel(P)
    assert k.params["caps"] == [5 / 3]
    assert k.on(0).max() == pytest.approx(5 / 3)


def test_form_identities(rng):
    n = 15
    f = rng.normal(size=(n, 3))
    Kt = np.exp(-embedding_kernel([f]).on(0))
    I = np.eye(n)
    assert np.allclose(form_evaluate(I, I, Kt), 1.0)
    for _ in range(10):
        S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        T = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        R = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        vals = form_evaluate(S, S, Kt)
        assert np.all(vals.real >= -1e-9)
        assert np.all(np.abs(vals.imag) <= 1e-9)
        lhs = state(form_evaluate(R.conj().T @ S, T, Kt))
        rhs = state(form_evaluate(S, R @ T, Kt))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_state_is_unital_and_positive(values):
    f = np.array(values)
    assert state(np.ones_like(f)) == 1.0
    s = state(f)
    assert f.min() - 1e-12 <= s <= f.max() + 1e-12
