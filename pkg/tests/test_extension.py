"""Extending stable functors over subdivision chains and prisms."""

import numpy as np
import pytest

from corrlab.acceptance import conjugated_k0, k0_of_corr
from corrlab.algebra import compose_homs
from corrlab.bicategory import u_of_corr
from corrlab.errors import (
    BoundaryMismatch,
    DimensionTooLarge,
    ShapeMismatch,
    Unfillable,
)
from corrlab.extension import (
    CstHomotopy,
    K0Oracle,
    K0Simplex,
    NCorrOracle,
    bar_F,
    extend_bar_G,
    extend_relative,
    gamma_functor,
    k0_functor,
    k0_matrix,
)
from corrlab.generators import random_chain, random_simplex
from corrlab.linalg import int_inverse
from corrlab.nerve import HornSpec, face, gamma_simplex, make_simplex, structural_hash


def closure(sig):
    seen, out = set(), []

    def add(s):
        key = structural_hash(s)
        if key in seen:
            return
        seen.add(key)
        if s.n >= 1:
            for i in range(s.n + 1):
                add(face(s, i))
        out.append(s)

    add(sig)
    return out


M01 = np.array([[1, 1], [0, 1]], dtype=np.int64)
M12 = np.array([[2, 0], [1, 1]], dtype=np.int64)


def test_k0_simplex_basics():
    s = K0Simplex((2, 2, 2), {(0, 1): M01, (1, 2): M12, (0, 2): M12 @ M01})
    assert s.n == 2
    assert np.array_equal(s.edge(0, 2), M12 @ M01)
    assert s.face(1) == K0Simplex((2, 2), {(0, 1): M12 @ M01})
    d = s.degeneracy(0)
    assert d.face(0) == s and d.face(1) == s
    assert np.array_equal(d.edge(0, 1), np.eye(2, dtype=np.int64))
    with pytest.raises(ShapeMismatch):
        K0Simplex((2, 3), {(0, 1): M01})


def test_k0_simplex_apply_map():
    s = K0Simplex((2, 2, 2), {(0, 1): M01, (1, 2): M12, (0, 2): M12 @ M01})
    sub = s.apply_map((0, 2))
    assert sub == K0Simplex((2, 2), {(0, 1): M12 @ M01})
    deg = s.apply_map((0, 0, 1, 2))
    assert deg == s.degeneracy(0)


def test_k0_oracle_fills():
    o = K0Oracle()
    e01 = K0Simplex((2, 2), {(0, 1): M01})
    e12 = K0Simplex((2, 2), {(0, 1): M12})
    filled = o.fill_inner_horn(HornSpec(2, 1, {0: e12, 2: e01}))
    assert np.array_equal(filled.edge(0, 2), M12 @ M01)

    perm = np.array([[0, 1], [1, 0]], dtype=np.int64)
    comp = K0Simplex((2, 2), {(0, 1): perm @ M01})
    last = K0Simplex((2, 2), {(0, 1): perm})
    out = o.fill_special_outer_horn(HornSpec(2, 2, {0: last, 1: comp}))
    assert np.array_equal(out.edge(0, 1), M01)
    # last edge must be invertible over the integers
    with pytest.raises(Unfillable):
        o.fill_special_outer_horn(
            HornSpec(2, 2, {0: K0Simplex((2, 2), {(0, 1): M01 + 1}), 1: comp})
        )


@pytest.mark.parametrize("seed", range(5))
def test_k0_matrix_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = random_chain(rng, 2, max_blocks=2, max_size=2, max_mult=1)
    assert np.array_equal(k0_matrix(phi), phi.mult_matrix.T)
    assert np.array_equal(
        k0_matrix(compose_homs(psi, phi)), k0_matrix(psi) @ k0_matrix(phi)
    )


@pytest.mark.parametrize("seed", range(6))
def test_bar_extension_computes_k0_of_edges(seed):
    rng = np.random.default_rng(seed + 50)
    n = 1 + seed % 2
    s = random_simplex(rng, n, twist=bool(seed % 2), max_blocks=2, max_size=2, max_mult=1)
    bar = bar_F(s, k0_functor(), K0Oracle(), {})
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            assert np.array_equal(bar.edge(i, j), k0_of_corr(s.edges[(i, j)]))
    # the leading edge agrees with the corner-certificate product
    fact = u_of_corr(s.edges[(0, 1)])
    direct = int_inverse(k0_matrix(fact.i_hom)) @ k0_matrix(fact.j_hom)
    assert np.array_equal(bar.edge(0, 1), direct)


def test_fill_trace_for_a_2_simplex():
    rng = np.random.default_rng(42)
    s = random_simplex(rng, 2, max_blocks=2, max_size=2, max_mult=1)
    ext = extend_bar_G(s, k0_functor(), K0Oracle(), {})
    shape = [(tuple(e["horn"]), e["kind"]) for e in ext.trace]
    assert shape == [((3, 2), "inner")] * 3 + [((3, 3), "special")]
    assert all(e["certificate"] for e in ext.trace if e["kind"] == "special")


def test_extension_memoised_across_calls():
    rng = np.random.default_rng(7)
    s = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    F, D, memo = k0_functor(), K0Oracle(), {}
    first = extend_bar_G(s, F, D, memo)
    again = extend_bar_G(s, F, D, memo)
    assert first is again
    fresh = extend_bar_G(s, F, D, {})
    assert fresh is not first and fresh.top() == first.top()


def test_extension_dimension_cap():
    rng = np.random.default_rng(3)
    s4 = random_simplex(rng, 4, max_blocks=1, max_size=2, max_mult=1)
    with pytest.raises(DimensionTooLarge):
        extend_bar_G(s4, k0_functor(), K0Oracle(), {})


@pytest.mark.parametrize("length", [1, 2])
def test_guided_extension_is_a_section(length):
    rng = np.random.default_rng(20 + length)
    homs = random_chain(rng, length, max_blocks=2, max_size=2, max_mult=1)
    arrows = list(homs)
    if length == 2:
        arrows.append(compose_homs(homs[1], homs[0]))
    F = gamma_functor(arrows)
    D = NCorrOracle()
    memo = {}
    for a in (homs[0].src, homs[0].dst):
        v = make_simplex([a], {}, {})
        assert structural_hash(bar_F(v, F, D, memo, guided=True)) == structural_hash(v)
    sig = gamma_simplex(homs)
    bar = bar_F(sig, F, D, memo, guided=True)
    assert structural_hash(bar) == structural_hash(sig)


def relative_setup(rng, n, twist):
    sig = random_simplex(rng, n, twist=twist, max_blocks=2, max_size=2, max_mult=1)
    F0 = k0_functor()
    F1, P = conjugated_k0(rng)

    def eta(a, P=P):
        return K0Simplex((a.nblocks, a.nblocks), {(0, 1): P(a)})

    return sig, F0, F1, P, eta


@pytest.mark.parametrize("n,twist", [(1, False), (1, True), (2, False), (2, True)])
def test_relative_extension_boundaries(n, twist):
    rng = np.random.default_rng(10 * n + twist)
    sig, F0, F1, P, eta = relative_setup(rng, n, twist)
    D = K0Oracle()
    rel = extend_relative(CstHomotopy(F0, F1, eta), None, [sig], D)
    memo = {}
    for s in closure(sig):
        assert rel.value(s, (0,) * (s.n + 1)) == bar_F(s, F0, D, memo)
        assert rel.value(s, (1,) * (s.n + 1)) == bar_F(s, F1, D, memo)
    # the prism diagonal composes the homotopy edge after the bar edge
    for s in closure(sig):
        if s.n != 1:
            continue
        diag = rel.value(s, (0, 1))
        want = P(s.algebras[1]) @ bar_F(s, F0, D, memo).edge(0, 1)
        assert np.array_equal(diag.edge(0, 1), want)


def test_relative_extension_identity_homotopy():
    rng = np.random.default_rng(77)
    sig = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    F = k0_functor()

    def eta(a):
        return K0Simplex((a.nblocks, a.nblocks), {(0, 1): np.eye(a.nblocks, dtype=np.int64)})

    rel = extend_relative(CstHomotopy(F, F, eta), None, [sig], K0Oracle())
    bar = bar_F(sig, F, K0Oracle(), {})
    assert rel.value(sig, (0, 0)) == bar
    assert rel.value(sig, (1, 1)) == bar
    assert np.array_equal(rel.value(sig, (0, 1)).edge(0, 1), bar.edge(0, 1))


def test_relative_extension_rejects_non_natural_data():
    rng = np.random.default_rng(88)
    sig = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    F = k0_functor()
    mats = {}

    def eta(a):
        key = structural_hash(a)
        if key not in mats:
            # a fresh random unimodular for each object; almost surely
            # incompatible with every nonidentity arrow
            m = np.eye(a.nblocks, dtype=np.int64)
            for _ in range(4):
                i, j = rng.integers(0, a.nblocks, 2)
                if i != j:
                    m[i] += int(rng.integers(1, 3)) * m[j]
            mats[key] = m
        return K0Simplex((a.nblocks, a.nblocks), {(0, 1): mats[key]})

    with pytest.raises(BoundaryMismatch):
        extend_relative(CstHomotopy(F, F, eta), None, [sig], K0Oracle())


def test_relative_extension_m0_is_bar():
    rng = np.random.default_rng(5)
    sig = random_simplex(rng, 2, max_blocks=2, max_size=2, max_mult=1)
    F, D = k0_functor(), K0Oracle()
    rel = extend_relative(F, None, [sig], D, m=0)
    memo = {}
    for s in closure(sig):
        assert rel.value(s, (0,) * (s.n + 1)) == bar_F(s, F, D, memo)


def test_relative_extension_caps():
    rng = np.random.default_rng(6)
    sig = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    F = k0_functor()
    with pytest.raises(DimensionTooLarge):
        extend_relative(F, None, [sig], K0Oracle(), m=2)
    s3 = random_simplex(rng, 3, max_blocks=1, max_size=2, max_mult=1)
    with pytest.raises(DimensionTooLarge):
        extend_relative(
            CstHomotopy(F, F, lambda a: None), None, [s3], K0Oracle(), m=1
        )


def test_relative_extension_unknown_simplex():
    rng = np.random.default_rng(9)
    sig = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    other = random_simplex(rng, 1, max_blocks=2, max_size=2, max_mult=1)
    rel = extend_relative(k0_functor(), None, [sig], K0Oracle(), m=0)
    with pytest.raises(BoundaryMismatch):
        rel.value(other, (0, 0))
