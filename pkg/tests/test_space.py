import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarset import graphs
from coarset.errors import DomainError
from coarset.space import (
    CoarseSpace,
    ControlledSet,
    PartialTranslation,
    bounded_geometry_constant,
    compose,
    inverse,
    is_generated_within,
    power,
)

from conftest import brute_compose, controlled_sets, partial_translations


def test_compose_single_pair():
    E = ControlledSet(4, [(1, 2)])
    F = ControlledSet(4, [(2, 3)])
    assert set(compose(E, F)) == {(1, 3)}
    assert len(compose(F, E)) == 0


def test_diagonal_is_unit():
    E = ControlledSet(5, [(0, 3), (2, 2), (4, 1)])
    D = ControlledSet.diagonal(5)
    assert compose(D, E) == E
    assert compose(E, D) == E


def test_compose_matches_triple_loop(rng):
    n = 50
    E = ControlledSet(n, rng.integers(0, n, (120, 2)))
    F = ControlledSet(n, rng.integers(0, n, (120, 2)))
    assert set(compose(E, F)) == brute_compose(E, F)


def test_mismatched_spaces_rejected():
    with pytest.raises(DomainError):
        compose(ControlledSet(3, [(0, 1)]), ControlledSet(4, [(0, 1)]))


def test_inverse_examples():
    assert set(inverse(ControlledSet(3, [(1, 2)]))) == {(2, 1)}
    E = ControlledSet(3, [(0, 1), (1, 0), (2, 2)])
    assert inverse(E) == E


def test_power_examples():
    E = ControlledSet(4, graphs.cycle_edges(4)).symmetrised()
    sq = power(E, 2)
    assert set(sq) == {(x, x) for x in range(4)} | {(x, (x + 2) % 4) for x in range(4)}
    assert power(E, 1) == E

    P5 = graphs.path(5)
    assert len(power(P5.gen, 4)) == 25
    assert len(power(P5.gen, 3)) == 23  # only the endpoints are 4 apart
    with pytest.raises(DomainError):
        power(E, 0)


def test_bounded_geometry_examples():
    assert bounded_geometry_constant(ControlledSet.diagonal(7)) == 1
    assert bounded_geometry_constant(ControlledSet(3)) == 0
    R = graphs.random_regular(20, 3, seed=2)
    assert bounded_geometry_constant(R.gen) == 4


def test_bounded_geometry_brute(rng):
    n = 30
    E = ControlledSet(n, rng.integers(0, n, (90, 2)))
    both = set(E) | {(y, x) for x, y in E}
    expected = max(sum(1 for (a, _) in both if a == x) for x in range(n))
    assert bounded_geometry_constant(E) == expected


def test_is_generated_within():
    P = graphs.path(7)
    assert is_generated_within(P.gen, P.gen, 5) == 1
    F = ControlledSet(7, [(x, x + 3) for x in range(4)])
    assert is_generated_within(F, P.gen, 10) == 3
    assert is_generated_within(F, P.gen, 2) is None
    U = graphs.disjoint_union([graphs.path(3), graphs.path(3)])
    assert is_generated_within(ControlledSet(6, [(0, 4)]), U.gen, 50) is None


@given(controlled_sets(n=8), controlled_sets(n=8), controlled_sets(n=8))
def test_compose_associative(E, F, G):
    assert compose(compose(E, F), G) == compose(E, compose(F, G))


@given(controlled_sets(n=9), controlled_sets(n=9))
def test_inverse_reverses_composition(E, F):
    assert inverse(compose(E, F)) == compose(inverse(F), inverse(E))
    assert inverse(inverse(E)) == E


@given(controlled_sets(n=7), st.integers(1, 4))
def test_powers_monotone_with_diagonal(E, k):
    E = E | ControlledSet.diagonal(7)
    assert power(E, k).issubset(power(E, k + 1))


@given(controlled_sets(max_n=10))
def test_iteration_is_lexicographic(E):
    pairs = list(E)
    assert pairs == sorted(set(pairs))


def test_space_gen_normalised():
    S = CoarseSpace.from_components([(3, [(0, 1), (1, 2)])])
    assert S.gen.is_symmetric()
    assert S.gen.contains_diagonal()
    assert S.points[2].component == 0


def test_space_validation():
    with pytest.raises(DomainError):
        CoarseSpace.from_components([(3, [(0, 1)])])  # point 2 isolated
    with pytest.raises(DomainError):
        CoarseSpace(np.array([0, 0, 1]), ControlledSet(3, [(0, 1), (1, 2)]))
    with pytest.raises(DomainError):
        CoarseSpace.from_components([(2, [(0, 5)])])
    with pytest.raises(DomainError):
        CoarseSpace.from_json({"points": 3})


def test_components_follow_transitive_closure(rng):
    parts = [graphs.random_connected(int(rng.integers(1, 15)), 0.2, seed=i) for i in range(5)]
    U = graphs.disjoint_union(parts)
    lab = U.coarse_components()
    for a in range(U.n):
        for b in range(U.n):
            assert (lab[a] == lab[b]) == (U.component[a] == U.component[b])


def test_json_roundtrip():
    U = graphs.disjoint_union([graphs.cycle(5), graphs.petersen(), graphs.path(1)])
    again = CoarseSpace.from_json(json.loads(json.dumps(U.to_json())))
    assert again.gen == U.gen
    assert np.array_equal(again.component, U.component)
    assert list(U.component_sizes()) == [5, 10, 1]


def test_distances_match_networkx():
    R = graphs.random_regular(60, 3, seed=7)
    G = nx.Graph(list(R.component_graph(0)[1]))
    d = R.distances(0)
    ref = dict(nx.all_pairs_shortest_path_length(G))
    for x in range(60):
        for y in range(60):
            assert d[x, y] == ref[x][y]


def test_gen_power_matches_composition():
    C = graphs.cycle(9)
    for k in range(1, 5):
        assert C.gen_power(k) == power(C.gen, k)


def test_partial_translation_basics():
    t = PartialTranslation.from_mapping(6, {0: 3, 1: 4, 5: 0})
    assert t(5) == 0
    assert set(t.graph()) == {(3, 0), (4, 1), (0, 5)}
    assert t.inverse().compose(t) == PartialTranslation.identity(6, [0, 1, 5])
    assert t.restrict([0, 2]).as_dict() == {0: 3}
    with pytest.raises(DomainError):
        PartialTranslation(4, [0, 1], [2, 2])


@given(partial_translations(), partial_translations())
def test_translation_composition_matches_graphs(s, t):
    if s.n != t.n:
        return
    st_ = s.compose(t)
    # graph(s∘t) = graph(s) ∘ graph(t) under the (t(x), x) convention
    assert st_.graph() == compose(s.graph(), t.graph())
