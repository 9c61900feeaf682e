"""Block algebras, *-homomorphisms, corners and normal forms."""

import numpy as np
import pytest

from corrlab.algebra import (
    EPS,
    corner_algebra,
    compose_homs,
    hom_normal_form,
    identity_hom,
    is_full_hom,
    make_algebra,
    make_star_hom,
)
from corrlab.errors import (
    EndpointMismatch,
    InvalidAlgebra,
    NotMultiplicative,
    NotProjection,
    NotStarPreserving,
    ShapeMismatch,
)
from corrlab.generators import (
    embedding_hom,
    random_algebra,
    random_element,
    random_unital_hom,
)
from corrlab.linalg import frob


def test_algebra_shape():
    a = make_algebra((2, 1), label="A")
    assert a.nblocks == 2
    assert a.dim == 5
    assert a.offset(0) == 0 and a.offset(1) == 4
    assert a.label == "A"
    assert a == make_algebra([2, 1])
    assert a != make_algebra((1, 2))


@pytest.mark.parametrize("blocks", [(), (0,), (-1, 2)])
def test_algebra_rejects_bad_blocks(blocks):
    with pytest.raises(InvalidAlgebra):
        make_algebra(blocks)


def test_matrix_unit_relations():
    a = make_algebra((2, 2))
    e = a.matrix_unit
    # e_ab e_cd = delta_bc e_ad within a block, zero across blocks
    assert (e(0, 0, 1) @ e(0, 1, 0)).is_close(e(0, 0, 0))
    assert (e(0, 0, 1) @ e(0, 0, 1)).is_close(a.zero())
    assert (e(0, 0, 1) @ e(1, 1, 0)).is_close(a.zero())
    assert sum(e(i, t, t).to_vec().sum() for i in range(2) for t in range(2)) == 4.0


def test_basis_triples_cover():
    a = make_algebra((2, 3))
    triples = list(a.basis_triples())
    assert len(triples) == a.dim == 13
    assert [p for p, *_ in triples] == list(range(13))


def test_element_arithmetic_matches_numpy():
    rng = np.random.default_rng(3)
    a = make_algebra((2, 3))
    x, y = random_element(a, rng), random_element(a, rng)
    z = x @ y
    for i in range(a.nblocks):
        assert frob(z.mats[i] - x.mats[i] @ y.mats[i]) < 1e-12
    assert x.adjoint().adjoint().is_close(x)
    assert ((x + y) - y).is_close(x)
    assert (x * 2.0).is_close(x + x)
    assert a.from_vec(x.to_vec()).is_close(x)


def test_adjoint_perm_is_involutive():
    a = make_algebra((2, 1, 3))
    p = a.adjoint_perm()
    assert np.array_equal(p[p], np.arange(a.dim))
    rng = np.random.default_rng(0)
    x = random_element(a, rng)
    assert frob(x.adjoint().to_vec() - x.to_vec().conj()[p]) < 1e-12


def test_embedding_hom_validates():
    rng = np.random.default_rng(7)
    src, dst = make_algebra((2,)), make_algebra((2, 1))
    phi = embedding_hom(src, dst, np.array([[1, 0]]), rng)
    assert phi.mult_matrix.tolist() == [[1, 0]]
    assert not phi.unital
    x, y = random_element(src, rng), random_element(src, rng)
    assert phi(x @ y).is_close(phi(x) @ phi(y))
    assert phi(x.adjoint()).is_close(phi(x).adjoint())


def test_star_hom_violations():
    rng = np.random.default_rng(7)
    src, dst = make_algebra((2,)), make_algebra((2, 1))
    phi = embedding_hom(src, dst, np.array([[1, 0]]), rng)
    with pytest.raises(NotStarPreserving):
        make_star_hom(src, dst, phi.matrix * 1j)
    with pytest.raises(NotMultiplicative):
        make_star_hom(src, dst, phi.matrix * 2.0)
    with pytest.raises(ShapeMismatch):
        make_star_hom(src, dst, phi.matrix[:-1])


def test_identity_and_composition():
    rng = np.random.default_rng(11)
    a = random_algebra(rng)
    i = identity_hom(a)
    assert i.unital
    assert np.array_equal(i.mult_matrix, np.eye(a.nblocks, dtype=np.int64))
    phi = random_unital_hom(a, rng)
    psi = random_unital_hom(phi.dst, rng)
    comp = compose_homs(psi, phi)
    x = random_element(a, rng)
    assert comp(x).is_close(psi(phi(x)))
    # multiplicities compose covariantly in the (src rows, dst cols) layout
    assert np.array_equal(comp.mult_matrix, phi.mult_matrix @ psi.mult_matrix)
    with pytest.raises(EndpointMismatch):
        compose_homs(phi, psi)


def test_is_full_hom():
    rng = np.random.default_rng(2)
    a = make_algebra((2,))
    assert is_full_hom(random_unital_hom(a, rng))
    partial = embedding_hom(a, make_algebra((2, 2)), np.array([[1, 0]]), rng)
    assert not is_full_hom(partial)


def test_corner_of_identity_is_everything():
    b = make_algebra((2, 2))
    pres = corner_algebra(b.identity(), b)
    assert pres.algebra.blocks == b.blocks
    assert pres.kept == (0, 1)
    rng = np.random.default_rng(4)
    x = random_element(pres.algebra, rng)
    y = random_element(pres.algebra, rng)
    assert pres.inclusion(x @ y).is_close(pres.inclusion(x) @ pres.inclusion(y))


def test_corner_drops_zero_blocks():
    b = make_algebra((3, 2))
    p = b.zero()
    p.mats[0][0, 0] = 1.0
    p.mats[0][1, 1] = 1.0
    pres = corner_algebra(p, b)
    assert pres.kept == (0,)
    assert pres.algebra.blocks == (2,)
    # inclusion lands under p
    x = random_element(pres.algebra, np.random.default_rng(1))
    img = pres.inclusion(x)
    assert frob((p @ img @ p - img).to_vec()) < 1e-12


def test_corner_rejects_non_projection():
    b = make_algebra((2,))
    x = random_element(b, np.random.default_rng(9))
    with pytest.raises(NotProjection):
        corner_algebra(x + x.adjoint(), b)


@pytest.mark.parametrize("seed", range(6))
def test_hom_normal_form(seed):
    rng = np.random.default_rng(seed)
    src = random_algebra(rng, max_blocks=2, max_size=2)
    phi = random_unital_hom(src, rng)
    ws = hom_normal_form(phi)
    x = random_element(src, rng, hermitian=True)
    img = phi(x)
    for j, m in enumerate(phi.dst.blocks):
        w = ws[j]
        assert frob(w.conj().T @ w - np.eye(m)) < 1e-9
        got = w.conj().T @ img.mats[j] @ w
        # expected: for each src block i, mult copies of x_i as x_i (x) I_r
        blocks = []
        for i, n in enumerate(src.blocks):
            r = int(phi.mult_matrix[i, j])
            if r:
                blocks.append(np.kron(x.mats[i], np.eye(r)))
        filled = sum(b.shape[0] for b in blocks)
        want = np.zeros((m, m), dtype=complex)
        o = 0
        for b in blocks:
            want[o : o + b.shape[0], o : o + b.shape[0]] = b
            o += b.shape[0]
        assert filled <= m
        assert frob(got - want) < 1e-9


def test_hom_normal_form_pads_nonunital():
    rng = np.random.default_rng(13)
    src, dst = make_algebra((2,)), make_algebra((3,))
    phi = embedding_hom(src, dst, np.array([[1]]), rng)
    assert not phi.unital
    (w,) = hom_normal_form(phi)
    assert frob(w.conj().T @ w - np.eye(3)) < 1e-9
    x = random_element(src, rng)
    got = w.conj().T @ phi(x).mats[0] @ w
    assert frob(got[:2, :2] - x.mats[0]) < 1e-9
    assert frob(got[2:, :]) < 1e-9 and frob(got[:, 2:]) < 1e-9
