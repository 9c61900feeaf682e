"""Simplices of correspondences: coherence, simplicial identities, horn fills.

Inner fills in dimension 3 must recover a deleted unitary exactly (up to
rounding); that uniqueness is what makes the nerve behave like a quasi-
category rather than a bare coherence bookkeeping device.
"""

import numpy as np
import pytest

from corrlab.algebra import FdCstarAlgebra
from corrlab.bicategory import find_corr_iso, is_equivalence
from corrlab.errors import (
    NotAnEquivalence,
    IncompatibleFaces,
    PentagonViolated,
    ShapeMismatch,
    Unfillable,
)
from corrlab.generators import (
    embedding_hom,
    random_chain,
    random_simplex,
    twist_edge,
)
from corrlab.modules import corr_close, identity_corr, iso_distance, make_iso
from corrlab.nerve import (
    HornSpec,
    apply_map,
    assemble_boundary,
    degeneracy,
    face,
    fill_inner_horn,
    fill_special_outer_horn,
    gamma_simplex,
    make_simplex,
    pentagon_residual,
    simplex_close,
    structural_hash,
    validate_simplex,
)


def weak_quadruples(n):
    return [
        (i, j, k, l)
        for i in range(n + 1)
        for j in range(i, n + 1)
        for k in range(j, n + 1)
        for l in range(k, n + 1)
    ]


@pytest.mark.parametrize("seed", range(3))
def test_gamma_simplex_validates(seed):
    rng = np.random.default_rng(seed)
    s = gamma_simplex(random_chain(rng, 3, max_mult=1), validate=True)
    for quad in weak_quadruples(3):
        assert pentagon_residual(s, *quad) < 1e-9


def test_identity_edges_and_unit_cells():
    rng = np.random.default_rng(4)
    s = random_simplex(rng, 2, max_mult=1)
    for i in range(3):
        assert corr_close(s.edges[(i, i)], identity_corr(s.algebras[i]))
    assert set(s.cells) == {
        (i, j, k) for i in range(3) for j in range(i, 3) for k in range(j, 3)
    }


@pytest.mark.parametrize("seed", range(3))
def test_face_identities(seed):
    rng = np.random.default_rng(seed + 10)
    s = random_simplex(rng, 3, max_mult=1)
    for i in range(3):
        for j in range(i + 1, 4):
            a = face(face(s, j), i)
            b = face(face(s, i), j - 1)
            assert structural_hash(a) == structural_hash(b)


def test_degeneracy_identities():
    rng = np.random.default_rng(2)
    s = random_simplex(rng, 2, max_mult=1)
    for i in range(3):
        d = degeneracy(s, i)
        assert d.n == 3
        assert structural_hash(face(d, i)) == structural_hash(s)
        assert structural_hash(face(d, i + 1)) == structural_hash(s)
        validate_simplex(d)


def test_apply_map_agrees_with_face_and_degeneracy():
    rng = np.random.default_rng(6)
    s = random_simplex(rng, 3, max_mult=1)
    assert structural_hash(apply_map(s, (0, 1, 2))) == structural_hash(face(s, 3))
    assert structural_hash(apply_map(s, (0, 2, 3))) == structural_hash(face(s, 1))
    d = apply_map(s, (0, 1, 1, 2))
    assert structural_hash(d) == structural_hash(degeneracy(face(s, 3), 1))


def test_twist_keeps_validity_and_changes_hash():
    rng = np.random.default_rng(7)
    s = random_simplex(rng, 3, max_mult=1)
    t = twist_edge(s, 0, 2, rng)
    validate_simplex(t)
    assert not corr_close(t.edges[(0, 2)], s.edges[(0, 2)])
    assert structural_hash(t) != structural_hash(s)
    assert simplex_close(s, s)
    assert not simplex_close(t, s)


def test_inner_fill_dim2():
    rng = np.random.default_rng(11)
    s = random_simplex(rng, 2, max_mult=2)
    horn = HornSpec(2, 1, {0: face(s, 0), 2: face(s, 2)})
    filled = fill_inner_horn(horn)
    assert corr_close(filled.edges[(0, 1)], s.edges[(0, 1)])
    assert corr_close(filled.edges[(1, 2)], s.edges[(1, 2)])
    validate_simplex(filled)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("k", [1, 2])
def test_inner_fill_dim3_recovers_deleted_cell(seed, k):
    rng = np.random.default_rng(100 + seed)
    s = random_simplex(rng, 3, max_mult=1, twist=True)
    horn = HornSpec(3, k, {j: face(s, j) for j in range(4) if j != k})
    filled = fill_inner_horn(horn)
    missing = tuple(x for x in range(4) if x != k)
    assert iso_distance(filled.cells[missing], s.cells[missing]) < 1e-9
    assert simplex_close(filled, s)


def equivalence_tail_simplex(rng, length):
    """A Gamma simplex whose final edge is induced by a *-isomorphism."""
    chain = random_chain(rng, length, max_mult=1)
    a = chain[-1].dst
    p = rng.permutation(a.nblocks)
    if not all(a.blocks[i] == a.blocks[int(p[i])] for i in range(a.nblocks)):
        p = np.arange(a.nblocks)
    mult = np.zeros((a.nblocks, a.nblocks), dtype=np.int64)
    for i in range(a.nblocks):
        mult[i, int(p[i])] = 1
    chain.append(embedding_hom(a, a, mult, rng))
    return gamma_simplex(chain, validate=False)


@pytest.mark.parametrize("seed", range(3))
def test_special_outer_fill_dim3(seed):
    rng = np.random.default_rng(200 + seed)
    s = equivalence_tail_simplex(rng, 2)
    assert is_equivalence(s.edges[(2, 3)])
    horn = HornSpec(3, 3, {j: face(s, j) for j in range(3)})
    filled = fill_special_outer_horn(horn)
    assert iso_distance(filled.cells[(0, 1, 2)], s.cells[(0, 1, 2)]) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_special_outer_fill_dim2(seed):
    rng = np.random.default_rng(300 + seed)
    s = equivalence_tail_simplex(rng, 1)
    assert is_equivalence(s.edges[(1, 2)])
    horn = HornSpec(2, 2, {0: face(s, 0), 1: face(s, 1)})
    filled = fill_special_outer_horn(horn)
    validate_simplex(filled)
    assert find_corr_iso(filled.edges[(0, 1)], s.edges[(0, 1)]) is not None


def test_outer_horn_needs_equivalence_tail():
    rng = np.random.default_rng(31)
    chain = random_chain(rng, 1, max_mult=1)
    tail = chain[-1].dst
    doubled = FdCstarAlgebra(tuple(2 * x for x in tail.blocks))
    chain.append(
        embedding_hom(tail, doubled, 2 * np.eye(tail.nblocks, dtype=np.int64), rng)
    )
    s = gamma_simplex(chain, validate=False)
    assert not is_equivalence(s.edges[(1, 2)])
    horn = HornSpec(2, 2, {0: face(s, 0), 1: face(s, 1)})
    with pytest.raises(NotAnEquivalence):
        fill_special_outer_horn(horn)


def test_inner_fill_rejects_outer_index():
    rng = np.random.default_rng(13)
    s = random_simplex(rng, 2, max_mult=1)
    horn = HornSpec(2, 2, {0: face(s, 0), 1: face(s, 1)})
    with pytest.raises(Unfillable):
        fill_inner_horn(horn)


def test_horn_spec_shape_checks():
    rng = np.random.default_rng(14)
    s = random_simplex(rng, 2, max_mult=1)
    with pytest.raises(ShapeMismatch):
        HornSpec(2, 3, {0: face(s, 0), 1: face(s, 1)})
    with pytest.raises(ShapeMismatch):
        HornSpec(2, 1, {0: face(s, 0)})
    with pytest.raises(ShapeMismatch):
        HornSpec(3, 1, {j: face(s, j) for j in (0, 2)} | {3: s})


def test_incompatible_faces_rejected():
    r1, r2 = np.random.default_rng(1), np.random.default_rng(2)
    t1, t2 = random_simplex(r1, 2), random_simplex(r2, 2)
    with pytest.raises(IncompatibleFaces):
        fill_inner_horn(HornSpec(2, 1, {0: face(t1, 0), 2: face(t2, 2)}))


def test_pentagon_violation_detected():
    rng = np.random.default_rng(5)
    s = random_simplex(rng, 3, max_mult=1)
    cells = dict(s.cells)
    c = cells[(0, 1, 2)]
    cells[(0, 1, 2)] = make_iso(c.src, c.dst, [-u for u in c.blocks])
    bad = make_simplex(list(s.algebras), dict(s.edges), cells, validate=False)
    with pytest.raises(PentagonViolated):
        validate_simplex(bad)
    assert pentagon_residual(bad, 0, 1, 2, 3) > 1.0


def test_boundary_assembly():
    rng = np.random.default_rng(8)
    s = random_simplex(rng, 3, max_mult=1)
    rebuilt = assemble_boundary({j: face(s, j) for j in range(4)})
    assert simplex_close(rebuilt, s)
    s2 = random_simplex(rng, 2, max_mult=1)
    with pytest.raises(Unfillable):
        assemble_boundary({j: face(s2, j) for j in range(3)})


def test_dim4_assembly_fills():
    rng = np.random.default_rng(42)
    s4 = random_simplex(rng, 4, max_blocks=1, max_size=2, max_mult=1)
    validate_simplex(s4)
    for k in (2, 4):
        horn = HornSpec(4, k, {j: face(s4, j) for j in range(5) if j != k})
        filled = fill_inner_horn(horn) if 0 < k < 4 else fill_special_outer_horn(horn)
        assert simplex_close(filled, s4)


def test_structural_hash_is_stable():
    rng = np.random.default_rng(15)
    s = random_simplex(rng, 2, max_mult=1)
    rebuilt = make_simplex(list(s.algebras), dict(s.edges), dict(s.cells))
    assert structural_hash(rebuilt) == structural_hash(s)
    assert structural_hash(face(s, 0)) == structural_hash(face(s, 0))
