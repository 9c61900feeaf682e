"""Seeded generators for algebras, homs, correspondences, and simplices.

Everything takes an explicit numpy Generator so test sweeps are
reproducible.  Sizes are kept small by default; tensor products grow
multiplicatively and the point of a sweep is coverage, not bulk.
"""
from __future__ import annotations

import numpy as np

from .algebra import AlgElement, FdCstarAlgebra, StarHom, make_star_hom
from .errors import ShapeMismatch
from .linalg import EPS
from .modules import (
    Correspondence,
    CorrIso,
    compose_isos,
    make_correspondence,
    make_module,
    tensor_corrs,
    tensor_iso,
)
from .nerve import NCorrSimplex, apply_map, gamma_simplex, identity_iso

__all__ = [
    "random_unitary",
    "random_algebra",
    "random_element",
    "embedding_hom",
    "random_unital_hom",
    "random_chain",
    "random_projection",
    "random_correspondence",
    "random_equivalence",
    "random_simplex",
    "twist_edge",
]


def random_unitary(n: int, rng) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_algebra(rng, max_blocks: int = 3, max_size: int = 3, label: str = "") -> FdCstarAlgebra:
    nb = int(rng.integers(1, max_blocks + 1))
    blocks = tuple(int(rng.integers(1, max_size + 1)) for _ in range(nb))
    return FdCstarAlgebra(blocks, label=label)


def random_element(algebra: FdCstarAlgebra, rng, hermitian: bool = False) -> AlgElement:
    mats = []
    for n in algebra.blocks:
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if hermitian:
            m = (m + m.conj().T) / 2
        mats.append(m)
    return AlgElement(algebra, mats)


def embedding_hom(src: FdCstarAlgebra, dst: FdCstarAlgebra, mult, rng=None) -> StarHom:
    """The multiplicity embedding src -> dst given by an integer matrix.

    Block i of the argument appears mult[i][l] times on the diagonal of dst
    block l, zero-padded if room is left; conjugated by a random unitary per
    block when rng is given.  Unital exactly when the multiplicities fill
    every dst block.
    """
    mult = np.asarray(mult, dtype=np.int64)
    if mult.shape != (src.nblocks, dst.nblocks):
        raise ShapeMismatch(f"mult shape {mult.shape} != {(src.nblocks, dst.nblocks)}")
    if np.any(mult < 0):
        raise ShapeMismatch("multiplicities must be nonnegative")
    for l, nl in enumerate(dst.blocks):
        used = int(sum(mult[i, l] * src.blocks[i] for i in range(src.nblocks)))
        if used > nl:
            raise ShapeMismatch(f"dst block {l} of size {nl} cannot hold {used} dimensions")
    cols = []
    units = [
        random_unitary(nl, rng) if rng is not None else np.eye(nl, dtype=complex)
        for nl in dst.blocks
    ]
    for i, r, c in ((t[1], t[2], t[3]) for t in src.basis_triples()):
        img = []
        for l, nl in enumerate(dst.blocks):
            b = np.zeros((nl, nl), dtype=complex)
            o = 0
            for ip, npi in enumerate(src.blocks):
                for _ in range(int(mult[ip, l])):
                    if ip == i:
                        b[o + r, o + c] = 1.0
                    o += npi
            u = units[l]
            img.append(u @ b @ u.conj().T)
        cols.append(np.concatenate([m.reshape(-1) for m in img]))
    matrix = np.stack(cols, axis=1)
    return make_star_hom(src, dst, matrix)


def random_unital_hom(src: FdCstarAlgebra, rng, max_blocks: int = 2, max_mult: int = 2) -> StarHom:
    """A random unital hom out of src, onto a freshly built target."""
    nb = int(rng.integers(1, max_blocks + 1))
    mult = np.zeros((src.nblocks, nb), dtype=np.int64)
    for l in range(nb):
        while not mult[:, l].any():
            mult[:, l] = rng.integers(0, max_mult + 1, size=src.nblocks)
    dst = FdCstarAlgebra(
        tuple(int(sum(mult[i, l] * src.blocks[i] for i in range(src.nblocks))) for l in range(nb))
    )
    return embedding_hom(src, dst, mult, rng)


def random_chain(rng, length: int, max_blocks: int = 2, max_size: int = 2, max_mult: int = 2):
    """A composable chain of unital homs, small enough for tensor sweeps."""
    a = random_algebra(rng, max_blocks=max_blocks, max_size=max_size)
    chain = []
    for _ in range(length):
        f = random_unital_hom(a, rng, max_blocks=max_blocks, max_mult=max_mult)
        chain.append(f)
        a = f.dst
    return chain


def random_projection(b: FdCstarAlgebra, rng, full: bool = True) -> AlgElement:
    """A random projection, by default with support in every block."""
    mats = []
    for n in b.blocks:
        lo = 1 if full else 0
        r = int(rng.integers(lo, n + 1))
        d = np.zeros(n)
        d[:r] = 1.0
        u = random_unitary(n, rng)
        mats.append(u @ np.diag(d).astype(complex) @ u.conj().T)
    return AlgElement(b, mats)


def random_correspondence(
    src: FdCstarAlgebra, dst: FdCstarAlgebra, rng, max_mult: int = 1
) -> Correspondence:
    """A random correspondence src -> dst with unital left action."""
    while True:
        m = rng.integers(0, max_mult + 1, size=(src.nblocks, dst.nblocks))
        q = [int(sum(m[i, k] * src.blocks[i] for i in range(src.nblocks))) for k in range(dst.nblocks)]
        if any(q):
            break
    module = make_module(dst, q)
    kept = [k for k in range(dst.nblocks) if q[k] > 0]
    lam = embedding_hom(src, module.compacts, m[:, kept], rng)
    return make_correspondence(src, module, lam.matrix)


def random_equivalence(dst: FdCstarAlgebra, rng) -> Correspondence:
    """A random Morita equivalence onto dst (permuted sizes, twisted action)."""
    nb = dst.nblocks
    sizes = [int(rng.integers(1, 3)) for _ in range(nb)]
    perm = rng.permutation(nb)
    src = FdCstarAlgebra(tuple(sizes[int(k)] for k in perm))
    module = make_module(dst, sizes)
    m = np.zeros((nb, nb), dtype=np.int64)
    for i in range(nb):
        m[i, int(perm[i])] = 1
    lam = embedding_hom(src, module.compacts, m, rng)
    return make_correspondence(src, module, lam.matrix)


def random_simplex(rng, n: int, twist: bool = False, **chain_kw) -> NCorrSimplex:
    """A valid n-simplex: the simplex of a random chain, optionally twisted
    so it is not the simplex of any chain on the nose."""
    s = gamma_simplex(random_chain(rng, n, **chain_kw), validate=False)
    if twist and n >= 1:
        i0 = int(rng.integers(0, n))
        j0 = int(rng.integers(i0 + 1, n + 1))
        s = twist_edge(s, i0, j0, rng)
    return s


def twist_edge(s: NCorrSimplex, i0: int, j0: int, rng) -> NCorrSimplex:
    """Conjugate edge (i0, j0) by a random unitary and fix up every cell
    that touches it; the result is a valid simplex with the same shape."""
    if not (0 <= i0 < j0 <= s.n):
        raise ShapeMismatch(f"({i0}, {j0}) is not a strict edge")
    old = s.edges[(i0, j0)]
    blocks = [random_unitary(m, rng) for m in old.module.mult]
    # lam'(a) = V lam(a) V* blockwise
    d = old.module.compacts
    col_mats = []
    for col in range(old.lam.matrix.shape[1]):
        v = old.lam.matrix[:, col]
        imgs = []
        o = 0
        for kp, mk in enumerate(d.blocks):
            b = v[o : o + mk * mk].reshape(mk, mk)
            u = blocks[old.module.kept[kp]]
            imgs.append(u @ b @ u.conj().T)
            o += mk * mk
        col_mats.append(np.concatenate([x.reshape(-1) for x in imgs]))
    lam_new = np.stack(col_mats, axis=1)
    new = make_correspondence(old.src, old.module, lam_new)
    v_iso = CorrIso(old, new, blocks)
    edges = dict(s.edges)
    edges[(i0, j0)] = new
    cells = dict(s.cells)
    for (i, j, k), u in s.cells.items():
        touches_target = (i, k) == (i0, j0)
        touches_left = (i, j) == (i0, j0)
        touches_right = (j, k) == (i0, j0)
        if not (touches_target or touches_left or touches_right):
            continue
        cur = u
        if touches_target:
            cur = CorrIso(cur.src, new, [blocks[p] @ b for p, b in enumerate(cur.blocks)])
        if touches_left or touches_right:
            lft = edges[(i, j)]
            rgt = edges[(j, k)]
            t_new = tensor_corrs(lft, rgt)
            t_old = tensor_corrs(
                old if touches_left else lft, old if touches_right else rgt
            )
            back = tensor_iso(
                v_iso.inverse() if touches_left else identity_iso(lft),
                v_iso.inverse() if touches_right else identity_iso(rgt),
                t_new,
                t_old,
            )
            cur = compose_isos(CorrIso(t_old.corr, cur.dst, cur.blocks), back)
        cells[(i, j, k)] = cur
    return NCorrSimplex(s.algebras, edges, cells)
