import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarset import graphs
from coarset.algebra import (
    TranslationOp,
    adjoint,
    constant_defect,
    from_partial_translation,
    phi,
    reassemble,
    standard_form,
)
from coarset.decomp import elementary_decomposition
from coarset.errors import DomainError
from coarset.morita import random_operator
from coarset.space import ControlledSet, PartialTranslation, compose
from coarset.spectral import laplacian

from conftest import partial_translations


def _random_op(n, rng, density=0.1, complex_=True):
    a = (rng.random((n, n)) < density) * rng.normal(size=(n, n))
    if complex_:
        a = a + 1j * (rng.random((n, n)) < density) * rng.normal(size=(n, n))
    return TranslationOp.from_dense(a)


def test_identity_is_unit(rng):
    T = _random_op(20, rng)
    I = TranslationOp.identity(20)
    assert (I @ T) == T
    assert (T @ I) == T


def test_matmul_matches_dense(rng):
    S, T = _random_op(50, rng), _random_op(50, rng)
    assert np.max(np.abs((S @ T).toarray() - S.toarray() @ T.toarray())) <= 1e-12


def test_adjointness_oracle(rng):
    T = _random_op(50, rng, 0.2)
    xi = rng.normal(size=50) + 1j * rng.normal(size=50)
    eta = rng.normal(size=50) + 1j * rng.normal(size=50)
    lhs = np.vdot(xi, T.apply(eta))
    rhs = np.vdot(adjoint(T).apply(xi), eta)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
    assert adjoint(adjoint(T)) == T
    assert np.array_equal(TranslationOp.identity(50).apply(xi), xi)


def test_space_mismatch():
    with pytest.raises(DomainError):
        TranslationOp.identity(3) @ TranslationOp.identity(4)


def test_support_must_respect_components():
    U = graphs.disjoint_union([graphs.path(2), graphs.path(2)])
    with pytest.raises(DomainError):
        TranslationOp.from_triplets(4, [[0, 3, 1.0, 0.0]], U)


def test_range_and_support_projections():
    t = PartialTranslation.from_mapping(6, {0: 2, 1: 5, 4: 0})
    v = from_partial_translation(t)
    assert (v @ v.H) == TranslationOp.indicator(6, [0, 2, 5])
    assert (v.H @ v) == TranslationOp.indicator(6, [0, 1, 4])
    assert v.support() == t.graph()


def test_three_cycle_cubes_to_indicator():
    t = PartialTranslation.from_mapping(5, {1: 2, 2: 3, 3: 1})
    v = from_partial_translation(t)
    assert (v @ v @ v) == TranslationOp.indicator(5, [1, 2, 3])


@given(partial_translations(max_n=20))
def test_projection_identities(t):
    v = from_partial_translation(t)
    assert (v.H @ v) == TranslationOp.indicator(t.n, t.domain)
    assert (v @ v.H) == TranslationOp.indicator(t.n, t.range)
    assert phi(v) == v @ v.H


def test_phi_examples():
    assert phi(TranslationOp.identity(7)) == TranslationOp.identity(7)
    L = laplacian(graphs.petersen().gen)
    assert phi(L.op) == TranslationOp.zeros(10)


def test_star_algebra_identities(rng):
    for _ in range(20):
        S, T, R = (_random_op(15, rng, 0.3) for _ in range(3))
        assert (S @ T).adjoint().max_deviation(T.adjoint() @ S.adjoint()) <= 1e-12
        assert ((S @ T) @ R).max_deviation(S @ (T @ R)) <= 1e-12
        assert (S @ (T + R)).max_deviation(S @ T + S @ R) <= 1e-12
        assert (S + T).support().issubset(S.support() | T.support())
        assert (S @ T).support().issubset(compose(S.support(), T.support()))


def test_standard_form_examples(rng):
    D = TranslationOp.diagonal(np.arange(1.0, 6.0))
    terms = standard_form(D)
    assert len(terms) == 1
    assert terms[0][1].is_identity()

    t = PartialTranslation.from_mapping(6, {0: 3, 1: 4})
    v = from_partial_translation(t).scale(2.5)
    assert len(standard_form(v)) == 1


def test_standard_form_random(rng):
    for _ in range(50):
        n = int(rng.integers(2, 40))
        T = _random_op(n, rng, 0.15)
        terms = standard_form(T)
        assert reassemble(terms, n) == T
        assert len(terms) <= max(1, T.support().bounded_geometry_constant())
        for f, v in terms:
            rng_ind = np.zeros(n, bool)
            rng_ind[v.range] = True
            assert np.all(f[~rng_ind] == 0)  # f_i v_i v_i* = f_i


def test_defect_examples():
    U = graphs.disjoint_union([graphs.cycle(5), graphs.path(3)])
    xi = np.array([2.0] * 5 + [-1.0] * 3)
    assert constant_defect(xi, U.gen) == 0.0

    P2 = graphs.path(2)
    # v swaps 0 -> 1 only: (vv* - v) δ_0 = -δ_1, (vv* - v) δ_0 for the inverse = δ_0
    assert constant_defect(np.array([1.0, 0.0]), P2.gen) == pytest.approx(1.0)


@given(st.floats(-5, 5), st.integers(0, 2**31))
def test_defect_homogeneous(a, seed):
    rng = np.random.default_rng(seed)
    C = graphs.cycle(7)
    xi = rng.normal(size=7)
    assert constant_defect(a * xi, C.gen) == pytest.approx(abs(a) * constant_defect(xi, C.gen), abs=1e-12)


def _phi_fixes(xi, space, rng):
    """Does ``Tξ = Φ(T)ξ`` hold over a generating test set supported in gen?"""
    dec = elementary_decomposition(space.gen, ControlledSet(space.n))
    ops = [from_partial_translation(t) for p in dec.elementary_pairs for t in (p, p.inverse())]
    ops += [random_operator(space, rng, 0.5) for _ in range(5)]
    return all(np.linalg.norm(T.apply(xi) - phi(T).apply(xi)) <= 1e-10 for T in ops)


def test_constants_characterised(rng):
    U = graphs.disjoint_union([graphs.petersen(), graphs.cycle(6)])
    const = np.repeat([3.0, -0.5], [10, 6])
    assert _phi_fixes(const, U, rng)
    assert constant_defect(const, U.gen) <= 1e-10
    for _ in range(10):
        xi = rng.normal(size=U.n)
        assert not _phi_fixes(xi, U, rng)
        assert constant_defect(xi, U.gen) > 1e-10
