"""Finite-dimensional C*-algebras and *-homomorphisms.

An algebra is a direct sum of full matrix blocks, held in its canonical
matrix-unit basis (blocks in order, entries row-major).  A *-homomorphism is
stored as the dense matrix of the underlying linear map in those bases,
together with its integer block-multiplicity matrix, recovered by rank
analysis of the images of the block units.

Every constructor validates; invalid data raises instead of propagating.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EndpointMismatch,
    InvalidAlgebra,
    NotMultiplicative,
    NotProjection,
    NotStarPreserving,
    ShapeMismatch,
)
from .linalg import EPS, frob, matrix_rank_tol, orthonormal_range

__all__ = [
    "FdCstarAlgebra",
    "AlgElement",
    "StarHom",
    "make_algebra",
    "make_star_hom",
    "identity_hom",
    "compose_homs",
    "is_full_hom",
    "corner_algebra",
    "CornerPresentation",
    "hom_normal_form",
]

# above this coordinate dimension, multiplicativity is checked on the
# generator identities instead of all basis pairs (equivalent, see
# _check_generators), purely to keep large compact-operator algebras cheap
_FULL_CHECK_DIM = 120


class FdCstarAlgebra:
    """A direct sum of matrix blocks M_{n_1} (+) ... (+) M_{n_r}."""

    __slots__ = ("blocks", "label", "dim", "_offsets")

    def __init__(self, blocks, label: str = ""):
        blocks = tuple(int(b) for b in blocks)
        if len(blocks) == 0:
            raise InvalidAlgebra("an algebra needs at least one block")
        if any(b < 1 for b in blocks):
            raise InvalidAlgebra(f"block sizes must be >= 1, got {blocks}")
        self.blocks = blocks
        self.label = label
        self.dim = sum(b * b for b in blocks)
        offs, o = [], 0
        for b in blocks:
            offs.append(o)
            o += b * b
        self._offsets = tuple(offs)

    @property
    def nblocks(self) -> int:
        return len(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, FdCstarAlgebra) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"FdCstarAlgebra({list(self.blocks)}{tag})"

    def offset(self, i: int) -> int:
        return self._offsets[i]

    def zero(self) -> "AlgElement":
        return AlgElement(self, [np.zeros((b, b), dtype=complex) for b in self.blocks])

    def identity(self) -> "AlgElement":
        return AlgElement(self, [np.eye(b, dtype=complex) for b in self.blocks])

    def block_unit(self, i: int) -> "AlgElement":
        mats = [np.zeros((b, b), dtype=complex) for b in self.blocks]
        mats[i] = np.eye(self.blocks[i], dtype=complex)
        return AlgElement(self, mats)

    def matrix_unit(self, i: int, a: int, b: int) -> "AlgElement":
        mats = [np.zeros((n, n), dtype=complex) for n in self.blocks]
        mats[i][a, b] = 1.0
        return AlgElement(self, mats)

    def basis_triples(self):
        """Yield (flat_index, block, row, col) over the canonical basis."""
        p = 0
        for i, n in enumerate(self.blocks):
            for a in range(n):
                for c in range(n):
                    yield p, i, a, c
                    p += 1

    def from_vec(self, v) -> "AlgElement":
        v = np.asarray(v, dtype=complex).ravel()
        if v.size != self.dim:
            raise ShapeMismatch(f"expected coordinate vector of length {self.dim}, got {v.size}")
        mats = []
        for i, n in enumerate(self.blocks):
            o = self._offsets[i]
            mats.append(v[o : o + n * n].reshape(n, n).copy())
        return AlgElement(self, mats)

    def adjoint_perm(self) -> np.ndarray:
        """Permutation p with vec(x*) = conj(vec(x))[p]."""
        p = np.empty(self.dim, dtype=np.intp)
        for flat, i, a, c in self.basis_triples():
            n = self.blocks[i]
            p[flat] = self._offsets[i] + c * n + a
        return p


def make_algebra(blocks, label: str = "") -> FdCstarAlgebra:
    return FdCstarAlgebra(blocks, label)


class AlgElement:
    """An element of an FdCstarAlgebra, one matrix per block."""

    __slots__ = ("algebra", "mats")

    def __init__(self, algebra: FdCstarAlgebra, mats):
        if len(mats) != algebra.nblocks:
            raise ShapeMismatch("wrong number of blocks")
        for m, n in zip(mats, algebra.blocks):
            if m.shape != (n, n):
                raise ShapeMismatch(f"block of shape {m.shape}, expected ({n}, {n})")
        self.algebra = algebra
        self.mats = [np.asarray(m, dtype=complex) for m in mats]

    def to_vec(self) -> np.ndarray:
        return np.concatenate([m.ravel() for m in self.mats])

    def __add__(self, other):
        return AlgElement(self.algebra, [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other):
        return AlgElement(self.algebra, [a - b for a, b in zip(self.mats, other.mats)])

    def __mul__(self, scalar):
        return AlgElement(self.algebra, [scalar * m for m in self.mats])

    __rmul__ = __mul__

    def __matmul__(self, other):
        return AlgElement(self.algebra, [a @ b for a, b in zip(self.mats, other.mats)])

    def adjoint(self) -> "AlgElement":
        return AlgElement(self.algebra, [m.conj().T for m in self.mats])

    def norm(self) -> float:
        return frob(self.to_vec())

    def is_close(self, other, eps: float = EPS) -> bool:
        return (self - other).norm() <= eps

    def __repr__(self):
        return f"AlgElement({self.algebra!r})"


@dataclass(frozen=True)
class StarHom:
    """A validated *-homomorphism between finite-dimensional C*-algebras.

    ``matrix`` is the (dst.dim x src.dim) matrix of the linear map in the
    canonical bases.  ``mult_matrix`` is the (src.nblocks x dst.nblocks)
    integer matrix of block multiplicities, cached at construction.
    """

    src: FdCstarAlgebra
    dst: FdCstarAlgebra
    matrix: np.ndarray
    mult_matrix: np.ndarray
    unital: bool
    _images: tuple = field(default=None, repr=False, compare=False)

    def apply(self, x) -> AlgElement:
        if isinstance(x, AlgElement):
            if x.algebra != self.src:
                raise EndpointMismatch("element not in the source algebra")
            x = x.to_vec()
        v = np.asarray(x, dtype=complex).ravel()
        nz = np.flatnonzero(v)
        if nz.size * 4 < v.size:
            return self.dst.from_vec(self.matrix[:, nz] @ v[nz])
        return self.dst.from_vec(self.matrix @ v)

    def __call__(self, x) -> AlgElement:
        return self.apply(x)

    def __repr__(self):
        return f"StarHom({self.src!r} -> {self.dst!r})"


def _images_by_dst_block(dst: FdCstarAlgebra, matrix: np.ndarray):
    """Reshape hom columns into per-dst-block image stacks (dimS, m, m)."""
    dim_s = matrix.shape[1]
    out = []
    for j, m in enumerate(dst.blocks):
        o = dst.offset(j)
        out.append(matrix[o : o + m * m, :].T.reshape(dim_s, m, m))
    return out


def _check_star(src, dst, matrix, eps):
    ps, pd = src.adjoint_perm(), dst.adjoint_perm()
    lhs = matrix[:, ps]
    rhs = np.conj(matrix[pd, :])
    resid = frob(lhs - rhs)
    if resid > eps:
        raise NotStarPreserving("map does not commute with the adjoint", resid)


def _check_mult_full(src, dst, matrix, eps):
    """phi(e_p) phi(e_q) == phi(e_p e_q) over all basis pairs, chunked."""
    dim_s = matrix.shape[1]
    blk = np.empty(dim_s, dtype=np.intp)
    row = np.empty(dim_s, dtype=np.intp)
    col = np.empty(dim_s, dtype=np.intp)
    for p, i, a, c in src.basis_triples():
        blk[p], row[p], col[p] = i, a, c
    images = _images_by_dst_block(dst, matrix)
    worst, worst_pair = 0.0, (0, 0)
    chunk = max(1, (1 << 21) // max(dim_s, 1))
    for j, x in enumerate(images):
        m = dst.blocks[j]
        if m == 0:
            continue
        for lo in range(0, dim_s, chunk):
            hi = min(dim_s, lo + chunk)
            prod = np.einsum("puv,qvw->pquw", x[lo:hi], x, optimize=True)
            same = blk[lo:hi, None] == blk[None, :]
            match = same & (col[lo:hi, None] == row[None, :])
            expected = np.zeros_like(prod)
            pp, qq = np.nonzero(match)
            if pp.size:
                tgt_idx = np.empty(pp.size, dtype=np.intp)
                for t, (p_, q_) in enumerate(zip(pp, qq)):
                    i = blk[lo + p_]
                    n = src.blocks[i]
                    tgt_idx[t] = src.offset(i) + row[lo + p_] * n + col[q_]
                expected[pp, qq] = x[tgt_idx]
            diff = np.linalg.norm((prod - expected).reshape(hi - lo, dim_s, -1), axis=2)
            k = int(np.argmax(diff))
            r = float(diff.ravel()[k])
            if r > worst:
                worst = r
                worst_pair = (lo + k // dim_s, k % dim_s)
    if worst > eps:
        p, q = worst_pair
        raise NotMultiplicative(
            f"fails on basis pair ({p}, {q}) = blocks ({blk[p]},{blk[q]})"
            f" units ({row[p]},{col[p]})x({row[q]},{col[q]})",
            worst,
        )


def _check_mult_generators(src, dst, matrix, eps):
    """Generator form of the multiplicativity check.

    With v_a := phi(e_{a1}) and w_b := phi(e_{1b}) per block, the identities
      (1) phi(e_{ab}) = v_a w_b
      (2) w_b v_c = delta * P   (P := w_1 v_1, per block; zero across blocks)
      (3) v_a P = v_a
    imply phi(e_ab) phi(e_cd) = delta_{bc} phi(e_ad) on all pairs, so checking
    them at EPS is the whole quartic check at a quadratic price.
    """

    def img(i, a, b):
        n = src.blocks[i]
        return dst.from_vec(matrix[:, src.offset(i) + a * n + b])

    worst = 0.0
    vs, ws, ps = [], [], []
    for i, n in enumerate(src.blocks):
        vs.append([img(i, a, 0) for a in range(n)])
        ws.append([img(i, 0, b) for b in range(n)])
        ps.append(ws[i][0] @ vs[i][0])
    for i, n in enumerate(src.blocks):
        for a in range(n):
            for b in range(n):
                worst = max(worst, (img(i, a, b) - vs[i][a] @ ws[i][b]).norm())
        for a in range(n):
            worst = max(worst, (vs[i][a] @ ps[i] - vs[i][a]).norm())
    for i, n in enumerate(src.blocks):
        for i2, n2 in enumerate(src.blocks):
            for b in range(n):
                for c in range(n2):
                    prod = ws[i][b] @ vs[i2][c]
                    if i == i2 and b == c:
                        prod = prod - ps[i]
                    worst = max(worst, prod.norm())
    if worst > eps:
        raise NotMultiplicative("fails a generator identity", worst)


def _mult_matrix(src, dst, matrix, eps) -> np.ndarray:
    hom = lambda x: dst.from_vec(matrix @ x.to_vec())  # noqa: E731
    r = np.zeros((src.nblocks, dst.nblocks), dtype=np.int64)
    for i, n in enumerate(src.blocks):
        u = hom(src.block_unit(i))
        for j in range(dst.nblocks):
            rk = matrix_rank_tol(u.mats[j], eps)
            if rk % n != 0:
                raise NotMultiplicative(
                    f"rank of phi(1_{i}) in dst block {j} is {rk}, not a multiple of {n}"
                )
            r[i, j] = rk // n
    for j, m in enumerate(dst.blocks):
        used = int(np.dot(r[:, j], src.blocks))
        if used > m:
            raise ShapeMismatch(f"multiplicities overfill dst block {j}: {used} > {m}")
    return r


def make_star_hom(src, dst, matrix, *, eps: float = EPS, validate: bool = True) -> StarHom:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (dst.dim, src.dim):
        raise ShapeMismatch(f"expected a {dst.dim} x {src.dim} matrix, got {matrix.shape}")
    matrix = matrix.copy()
    matrix.setflags(write=False)
    if validate:
        _check_star(src, dst, matrix, eps)
        if src.dim <= _FULL_CHECK_DIM:
            _check_mult_full(src, dst, matrix, eps)
        else:
            _check_mult_generators(src, dst, matrix, eps)
    mm = _mult_matrix(src, dst, matrix, eps)
    one = dst.from_vec(matrix @ src.identity().to_vec())
    unital = one.is_close(dst.identity(), eps)
    return StarHom(src, dst, matrix, mm, unital)


def identity_hom(a: FdCstarAlgebra) -> StarHom:
    return StarHom(a, a, np.eye(a.dim, dtype=complex), np.eye(a.nblocks, dtype=np.int64), True)


def compose_homs(psi: StarHom, phi: StarHom, *, eps: float = EPS) -> StarHom:
    """psi . phi, with the multiplicity product identity re-checked."""
    if phi.dst != psi.src:
        raise EndpointMismatch("homs are not composable")
    comp = make_star_hom(phi.src, psi.dst, psi.matrix @ phi.matrix, eps=eps)
    expected = phi.mult_matrix @ psi.mult_matrix
    if not np.array_equal(comp.mult_matrix, expected):
        raise NotMultiplicative("composite multiplicities disagree with the factor product")
    return comp


def is_full_hom(phi: StarHom, *, eps: float = EPS) -> bool:
    """True iff span{ b phi(1) b' } = dst.

    Computed blockwise by the rank of the literal span for small blocks; for
    blocks above size 6 the span {e_ab p e_cd} = {p[b,c] e_ad} factorizes, so
    the rank is m^2 exactly when the block of phi(1) is nonzero.
    """
    p = phi.apply(phi.src.identity())
    for j, m in enumerate(phi.dst.blocks):
        pj = p.mats[j]
        if m <= 6:
            vecs = []
            for a in range(m):
                for b in range(m):
                    for c in range(m):
                        for d in range(m):
                            x = np.zeros((m, m), dtype=complex)
                            x[a, d] = pj[b, c]
                            vecs.append(x.ravel())
            if matrix_rank_tol(np.array(vecs), eps) < m * m:
                return False
        else:
            if frob(pj) <= eps:
                return False
    return True


@dataclass(frozen=True)
class CornerPresentation:
    """The corner p B p presented as a canonical algebra.

    ``isometries[t]`` has orthonormal columns spanning the range of the
    corresponding block of p; ``kept`` lists the original block indices with
    nonzero corner (zero blocks are dropped from the presentation).
    ``inclusion`` is the (typically non-unital) embedding back into B.
    """

    algebra: FdCstarAlgebra
    inclusion: StarHom
    isometries: tuple
    kept: tuple


def corner_algebra(p: AlgElement, b: FdCstarAlgebra, *, eps: float = EPS) -> CornerPresentation:
    if p.algebra != b:
        raise EndpointMismatch("projection does not live in the given algebra")
    r1 = frob((p @ p - p).to_vec())
    r2 = frob((p.adjoint() - p).to_vec())
    if max(r1, r2) > eps:
        raise NotProjection("p is not a projection", max(r1, r2))
    kept, isos = [], []
    for i, n in enumerate(b.blocks):
        v = orthonormal_range(p.mats[i], eps)
        if v.shape[1] > 0:
            kept.append(i)
            isos.append(v)
    if not kept:
        raise InvalidAlgebra("the corner of a zero projection is not an algebra")
    corner = FdCstarAlgebra([v.shape[1] for v in isos], label=f"{b.label}-corner" if b.label else "")
    cols = []
    for t, i in enumerate(kept):
        v = isos[t]
        k = v.shape[1]
        for a in range(k):
            for c in range(k):
                y = b.zero()
                y.mats[i][:, :] = np.outer(v[:, a], v[:, c].conj())
                cols.append(y.to_vec())
    inclusion = make_star_hom(corner, b, np.array(cols).T, eps=eps)
    return CornerPresentation(corner, inclusion, tuple(isos), tuple(kept))


def hom_normal_form(phi: StarHom, *, eps: float = EPS):
    """Unitaries W_j with W_j^* phi(x)_j W_j in canonical block-diagonal form.

    Canonical form in dst block j: for src blocks i in order, r_ij copies of
    x_i arranged as x_i (x) I_{r_ij} (row index (a, t), a major), then zero
    padding.  Returns the list of W_j.
    """
    src, dst = phi.src, phi.dst
    ws = []
    for j, m in enumerate(dst.blocks):
        cols = []
        for i, n in enumerate(src.blocks):
            r = int(phi.mult_matrix[i, j])
            if r == 0:
                continue
            p11 = phi.apply(src.matrix_unit(i, 0, 0)).mats[j]
            v = orthonormal_range(p11, eps)
            if v.shape[1] != r:
                raise NotMultiplicative(
                    f"rank of phi(e11) in block {j} is {v.shape[1]}, expected {r}"
                )
            for a in range(n):
                ea1 = phi.apply(src.matrix_unit(i, a, 0)).mats[j]
                for t in range(r):
                    cols.append(ea1 @ v[:, t])
        w = np.column_stack(cols) if cols else np.zeros((m, 0), dtype=complex)
        fill = w.shape[1]
        if fill < m:
            comp = np.eye(m, dtype=complex) - w @ w.conj().T
            extra = orthonormal_range(comp, eps)
            if extra.shape[1] != m - fill:
                raise ShapeMismatch("could not complete normal-form unitary")
            w = np.column_stack([w, extra])
        ws.append(w)
    return ws
