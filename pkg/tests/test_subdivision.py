"""Subdivision combinatorics and the induced algebra diagram.

Chain counts are checked against brute-force enumerations built here from
itertools, independently of the library's own generators.
"""

import itertools

import numpy as np
import pytest

from corrlab.algebra import compose_homs
from corrlab.errors import (
    DimensionTooLarge,
    IndexOutOfRange,
    NotMonotone,
    NotNested,
    ShapeViolation,
)
from corrlab.generators import random_simplex
from corrlab.linalg import frob
from corrlab.subdivision import (
    AugChain,
    SubsetChain,
    connecting_hom,
    degeneracy,
    enumerate_csd,
    enumerate_sd,
    face,
    is_nondegenerate,
    module_E_S,
    phi_star,
    subdivision_functor,
)


def nonempty_subsets(n):
    out = []
    for r in range(1, n + 2):
        out.extend(itertools.combinations(range(n + 1), r))
    return out


def brute_sd_chains(n):
    """All strictly increasing subset chains, grouped by dimension."""
    subsets = nonempty_subsets(n)
    by_dim = {}
    frontier = [(s,) for s in subsets]
    while frontier:
        nxt = []
        for c in frontier:
            by_dim.setdefault(len(c) - 1, set()).add(c)
            for t in subsets:
                if set(c[-1]) < set(t):
                    nxt.append(c + (t,))
        frontier = nxt
    return by_dim


def brute_csd_chains(n):
    """All nondegenerate augmented chains, grouped by dimension."""
    big = [s for s in nonempty_subsets(n) if len(s) >= 2]
    suffixes = [()]
    frontier = [(s,) for s in big]
    while frontier:
        nxt = []
        for c in frontier:
            suffixes.append(c)
            for t in big:
                if set(c[-1]) < set(t):
                    nxt.append(c + (t,))
        frontier = nxt
    by_dim = {}
    for suf in suffixes:
        pool = suf[0] if suf else tuple(range(n + 1))
        for r in range(0, len(pool) + 1):
            if r == 0 and not suf:
                continue
            for vs in itertools.combinations(pool, r):
                d = r + len(suf) - 1
                by_dim.setdefault(d, set()).add((vs, suf))
    return by_dim


def test_sd2_counts():
    by_dim = enumerate_sd(2)
    assert {d: len(v) for d, v in by_dim.items()} == {0: 7, 1: 12, 2: 6}
    brute = brute_sd_chains(2)
    for d, chains in by_dim.items():
        assert {c.entries for c in chains} == brute[d]


def test_csd_counts():
    one = enumerate_csd(1)
    assert {d: len(v) for d, v in one.items()} == {0: 3, 1: 3, 2: 1}
    two = enumerate_csd(2)
    assert {d: len(v) for d, v in two.items()} == {0: 7, 1: 15, 2: 13, 3: 4}
    brute = brute_csd_chains(2)
    for d, chains in two.items():
        assert {(c.vertices, c.subsets) for c in chains} == brute[d]
    assert all(is_nondegenerate(c) for chains in two.values() for c in chains)


def test_chain_shape_rules():
    with pytest.raises(ShapeViolation):
        SubsetChain(())
    with pytest.raises(ShapeViolation):
        SubsetChain(((),))
    with pytest.raises(NotNested):
        SubsetChain(((0, 1), (0, 2)))
    with pytest.raises(ShapeViolation):
        AugChain((), ())
    with pytest.raises(ShapeViolation):
        AugChain((1, 0), ())
    with pytest.raises(ShapeViolation):
        AugChain((1,), ((0, 2),))
    with pytest.raises(ShapeViolation):
        AugChain((), ((0,),))
    with pytest.raises(NotNested):
        AugChain((), ((0, 1), (0, 2)))
    # vertices may repeat (degenerate chains are legal, just not enumerated)
    c = AugChain((0, 0), ((0, 1),))
    assert not is_nondegenerate(c)
    assert c.dim == 2


def chain_pool(n):
    """Nondegenerate chains of dim <= 3 plus one-step degeneracies."""
    pool = []
    for d, chains in enumerate_csd(n).items():
        if d > 3:
            continue
        pool.extend(chains)
        for c in chains:
            if d <= 2:
                pool.extend(degeneracy(c, i) for i in range(d + 1))
    return pool


@pytest.mark.parametrize("n", [1, 2])
def test_simplicial_identities_exhaustive(n):
    for c in chain_pool(n):
        l = c.dim
        if l >= 2:
            for j in range(l + 1):
                for i in range(j):
                    assert face(face(c, j), i) == face(face(c, i), j - 1)
        for i in range(l + 1):
            for j in range(i, l + 1):
                assert degeneracy(degeneracy(c, j), i) == degeneracy(
                    degeneracy(c, i), j + 1
                )
        for j in range(l + 1):
            s = degeneracy(c, j)
            for i in range(l + 2):
                if i < j:
                    assert face(s, i) == degeneracy(face(c, i), j - 1)
                elif i in (j, j + 1):
                    assert face(s, i) == c
                else:
                    assert face(s, i) == degeneracy(face(c, i - 1), j)


def test_face_bounds():
    c = AugChain((0,), ())
    with pytest.raises(ShapeViolation):
        face(c, 0)
    c2 = AugChain((0,), ((0, 1),))
    with pytest.raises(IndexOutOfRange):
        face(c2, 2)
    with pytest.raises(IndexOutOfRange):
        degeneracy(c2, -1)


def test_phi_star():
    collapse = [0, 0, 1]
    c = AugChain((0, 2), ((0, 1, 2),))
    img = phi_star(collapse, c)
    assert img == AugChain((0, 1), ((0, 1),))
    # a fully collapsed subset turns into a vertex entry
    c2 = AugChain((), ((0, 1), (0, 1, 2)))
    img2 = phi_star([1, 1, 2], c2)
    assert img2 == AugChain((1,), ((1, 2),))
    with pytest.raises(NotMonotone):
        phi_star([1, 0], AugChain((0, 1), ()))
    # functoriality on the whole 2-skeleton
    phi, psi = [0, 1, 1], [0, 0, 1, 2]
    comp = [psi[v] for v in phi]
    for chains in enumerate_csd(2).values():
        for c in chains:
            assert phi_star(psi, phi_star(phi, c)) == phi_star(comp, c)


def test_module_E_S_shapes():
    rng = np.random.default_rng(3)
    s = random_simplex(rng, 2, max_mult=1)
    data = module_E_S(s, (0, 1, 2))
    want = tuple(
        sum(s.edges[(v, 2)].module.mult[k] for v in (0, 1, 2))
        for k in range(s.algebras[2].nblocks)
    )
    assert data.module.mult == want
    assert data.top == 2
    single = module_E_S(s, (1,))
    assert single.module.mult == s.edges[(1, 2)].module.mult
    with pytest.raises(IndexOutOfRange):
        module_E_S(s, (0, 3))


def test_connecting_hom_identity_and_composition():
    rng = np.random.default_rng(5)
    s = random_simplex(rng, 2, max_mult=1)
    f = connecting_hom(s, (0, 2), (0, 2))
    assert frob(f.matrix - np.eye(f.matrix.shape[0])) < 1e-9
    f01 = connecting_hom(s, (0,), (0, 1))
    f12 = connecting_hom(s, (0, 1), (0, 1, 2))
    f02 = connecting_hom(s, (0,), (0, 1, 2))
    assert frob(compose_homs(f12, f01).matrix - f02.matrix) < 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_subdivision_functor_triples(seed):
    rng = np.random.default_rng(seed + 20)
    s = random_simplex(rng, 2, twist=bool(seed % 2), max_mult=1)
    sd = subdivision_functor(s, check=False)
    nested = [
        (a, b, c)
        for a in sd.subsets
        for b in sd.subsets
        if set(a) <= set(b)
        for c in sd.subsets
        if set(b) <= set(c)
    ]
    # brute-force triple census over the subsets of [2]
    assert len(nested) == 37
    assert sum(1 for a, b, c in nested if set(a) < set(b) < set(c)) == 6
    worst = 0.0
    for a, b, c in nested:
        lhs = compose_homs(sd.hom(b, c), sd.hom(a, b))
        worst = max(worst, frob(lhs.matrix - sd.hom(a, c).matrix))
    assert worst < 1e-9


def test_subdivision_functor_self_check_passes():
    rng = np.random.default_rng(9)
    s = random_simplex(rng, 3, max_blocks=1, max_size=2, max_mult=1)
    subdivision_functor(s, check=True)


def test_dimension_caps():
    rng = np.random.default_rng(1)
    s5 = random_simplex(rng, 5, max_blocks=1, max_size=1, max_mult=1)
    with pytest.raises(DimensionTooLarge):
        subdivision_functor(s5)
    with pytest.raises(DimensionTooLarge):
        enumerate_csd(5)
    with pytest.raises(DimensionTooLarge):
        enumerate_sd(5)
