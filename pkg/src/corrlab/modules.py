"""Hilbert modules, correspondences, unitary intertwiners, tensor products.

A right Hilbert module over B = (+)_k M_{n_k} is a direct sum of row spaces
C^{m_k x n_k} with entrywise right multiplication and inner product
<x, y> = (x_k^* y_k)_k.  Its compact operators form (+)_{m_k > 0} M_{m_k};
blocks with m_k = 0 stay in the module data but are dropped from the
compacts, with ``kept`` recording the surviving base indices.

A correspondence A -> B is such a module together with a unital
*-homomorphism A -> K(E).  Unitary intertwiners are stored per base block,
which encodes right linearity structurally.

The balanced tensor product E (x)_B F is computed in closed form.  Writing
e^(j)_{a1} for the module matrix units of E, every simple tensor reduces to
the family { e^(j)_{a1} (x) y }, whose Gram matrix factors through the
projections P_jk = lambda_F(e^(j)_{11}) restricted to base block k.  An
orthonormalisation R_jk of P_jk turns each group into r_jk = rank(P_jk)
coordinate rows, so the tensor module has multiplicity
Q_k = sum_j m_j r_jk with rows ordered (j, a, t), j and a and t ascending.
"""
from __future__ import annotations

import numpy as np

from .algebra import AlgElement, FdCstarAlgebra, StarHom, make_star_hom, identity_hom
from .errors import (
    BaseMismatch,
    EndpointMismatch,
    InvalidAlgebra,
    NotIntertwining,
    NotRightLinear,
    NotUnitary,
    ShapeMismatch,
)
from .linalg import EPS, frob, gram_onb, matrix_rank_tol

__all__ = [
    "HilbertModule",
    "ModElement",
    "make_module",
    "direct_sum_modules",
    "Correspondence",
    "make_correspondence",
    "identity_corr",
    "direct_sum_corrs",
    "corr_close",
    "is_full_corr",
    "CorrIso",
    "make_iso",
    "compose_isos",
    "iso_distance",
    "TensorProduct",
    "tensor_corrs",
    "tensor_iso",
    "iso_from_action",
    "left_unitor",
    "right_unitor",
    "associator",
]


class HilbertModule:
    """Right Hilbert module (+)_k C^{m_k x n_k} over a fixed base algebra."""

    __slots__ = ("base", "mult", "dim", "compacts", "kept", "_pos", "_offsets")

    def __init__(self, base: FdCstarAlgebra, mult):
        mult = tuple(int(m) for m in mult)
        if len(mult) != base.nblocks:
            raise ShapeMismatch("one multiplicity per base block required")
        if any(m < 0 for m in mult):
            raise ShapeMismatch(f"multiplicities must be >= 0, got {mult}")
        self.base = base
        self.mult = mult
        self.dim = sum(m * n for m, n in zip(mult, base.blocks))
        kept = tuple(k for k, m in enumerate(mult) if m > 0)
        if not kept:
            raise InvalidAlgebra("the zero module has no compact operators")
        self.kept = kept
        self._pos = {k: t for t, k in enumerate(kept)}
        self.compacts = FdCstarAlgebra([mult[k] for k in kept])
        offs, o = [], 0
        for m, n in zip(mult, base.blocks):
            offs.append(o)
            o += m * n
        self._offsets = tuple(offs)

    def __eq__(self, other):
        return (
            isinstance(other, HilbertModule)
            and self.base == other.base
            and self.mult == other.mult
        )

    def __hash__(self):
        return hash((self.base, self.mult))

    def __repr__(self):
        return f"HilbertModule({self.base!r}, mult={list(self.mult)})"

    def compact_pos(self, k: int):
        """Index of base block k inside the compacts, or None if dropped."""
        return self._pos.get(k)

    def offset(self, k: int) -> int:
        return self._offsets[k]

    def zero(self) -> "ModElement":
        return ModElement(
            self,
            [np.zeros((m, n), dtype=complex) for m, n in zip(self.mult, self.base.blocks)],
        )

    def from_vec(self, v) -> "ModElement":
        v = np.asarray(v, dtype=complex).ravel()
        if v.size != self.dim:
            raise ShapeMismatch(f"expected {self.dim} coordinates, got {v.size}")
        mats = []
        for k, (m, n) in enumerate(zip(self.mult, self.base.blocks)):
            o = self._offsets[k]
            mats.append(v[o : o + m * n].reshape(m, n).copy())
        return ModElement(self, mats)

    def basis_coords(self):
        """Yield (flat, block, row, col) over the coordinate basis."""
        p = 0
        for k, (m, n) in enumerate(zip(self.mult, self.base.blocks)):
            for r in range(m):
                for c in range(n):
                    yield p, k, r, c
                    p += 1


def make_module(base: FdCstarAlgebra, mult) -> HilbertModule:
    return HilbertModule(base, mult)


class ModElement:
    """Element of a HilbertModule, one m_k x n_k matrix per base block."""

    __slots__ = ("module", "mats")

    def __init__(self, module: HilbertModule, mats):
        if len(mats) != module.base.nblocks:
            raise ShapeMismatch("wrong number of blocks")
        for x, m, n in zip(mats, module.mult, module.base.blocks):
            if x.shape != (m, n):
                raise ShapeMismatch(f"block of shape {x.shape}, expected ({m}, {n})")
        self.module = module
        self.mats = [np.asarray(x, dtype=complex) for x in mats]

    def to_vec(self) -> np.ndarray:
        if self.module.dim == 0:
            return np.zeros(0, dtype=complex)
        return np.concatenate([x.ravel() for x in self.mats])

    def __add__(self, other):
        return ModElement(self.module, [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other):
        return ModElement(self.module, [a - b for a, b in zip(self.mats, other.mats)])

    def __mul__(self, scalar):
        return ModElement(self.module, [scalar * x for x in self.mats])

    __rmul__ = __mul__

    def right_mul(self, b: AlgElement) -> "ModElement":
        if b.algebra != self.module.base:
            raise BaseMismatch("element does not live in the base algebra")
        return ModElement(self.module, [x @ bb for x, bb in zip(self.mats, b.mats)])

    def inner(self, other: "ModElement") -> AlgElement:
        """<self, other> in the base algebra, conjugate-linear in self."""
        if other.module != self.module:
            raise BaseMismatch("inner product needs a common module")
        return AlgElement(
            self.module.base, [x.conj().T @ y for x, y in zip(self.mats, other.mats)]
        )

    def norm(self) -> float:
        return frob(self.to_vec())

    def __repr__(self):
        return f"ModElement({self.module!r})"


def direct_sum_modules(modules):
    """Direct sum over a common base.

    Returns (sum_module, starts) where starts[s][k] is the first row of
    summand s inside base block k (rows are stacked summand-major).
    """
    if not modules:
        raise ShapeMismatch("empty direct sum")
    base = modules[0].base
    for e in modules:
        if e.base != base:
            raise BaseMismatch("direct sum needs a common base algebra")
    mult = [0] * base.nblocks
    starts = []
    for e in modules:
        starts.append(tuple(mult))
        for k in range(base.nblocks):
            mult[k] += e.mult[k]
    return make_module(base, mult), tuple(starts)


class Correspondence:
    """A proper correspondence: a module plus a unital left action by compacts."""

    __slots__ = ("src", "module", "lam")

    def __init__(self, src: FdCstarAlgebra, module: HilbertModule, lam: StarHom):
        if lam.src != src or lam.dst != module.compacts:
            raise EndpointMismatch("left action must map src into the compacts of the module")
        if not lam.unital:
            raise EndpointMismatch("left action must be unital on the compacts")
        self.src = src
        self.module = module
        self.lam = lam

    @property
    def dst(self) -> FdCstarAlgebra:
        return self.module.base

    @property
    def dim(self) -> int:
        return self.module.dim

    def lam_block(self, a: AlgElement, k: int) -> np.ndarray:
        """Block k of lambda(a), as an m_k x m_k matrix (0 x 0 if dropped)."""
        pos = self.module.compact_pos(k)
        if pos is None:
            return np.zeros((0, 0), dtype=complex)
        return self.lam.apply(a).mats[pos]

    def left_mul(self, a: AlgElement, x: ModElement) -> ModElement:
        img = self.lam.apply(a)
        mats = []
        for k in range(self.dst.nblocks):
            pos = self.module.compact_pos(k)
            mats.append(img.mats[pos] @ x.mats[k] if pos is not None else x.mats[k] * 0.0)
        return ModElement(self.module, mats)

    def __repr__(self):
        return f"Correspondence({self.src!r} -> {self.dst!r}, mult={list(self.module.mult)})"


def make_correspondence(
    src: FdCstarAlgebra,
    module: HilbertModule,
    lam_matrix,
    *,
    eps: float = EPS,
    validate: bool = True,
) -> Correspondence:
    lam = make_star_hom(src, module.compacts, lam_matrix, eps=eps, validate=validate)
    return Correspondence(src, module, lam)


def identity_corr(b: FdCstarAlgebra) -> Correspondence:
    """B as a correspondence B -> B; compacts coincide with B itself."""
    module = make_module(b, b.blocks)
    return Correspondence(b, module, identity_hom(b))


def direct_sum_corrs(corrs):
    """Direct sum of correspondences with common endpoints, diagonal action."""
    first = corrs[0]
    for c in corrs:
        if c.src != first.src:
            raise EndpointMismatch("summands must share the source algebra")
    module, starts = direct_sum_modules([c.module for c in corrs])
    kg = module.compacts
    cols = []
    d = first.src.dim
    lam_mats = [c.lam.matrix for c in corrs]
    for p in range(d):
        out = [np.zeros((module.mult[k], module.mult[k]), dtype=complex) for k in module.kept]
        for s, c in enumerate(corrs):
            v = c.module.compacts.from_vec(lam_mats[s][:, p])
            for k in c.module.kept:
                pos_sum = module.compact_pos(k)
                o = starts[s][k]
                m = c.module.mult[k]
                out[pos_sum][o : o + m, o : o + m] += v.mats[c.module.compact_pos(k)]
        cols.append(np.concatenate([x.ravel() for x in out]))
    lam = make_star_hom(first.src, kg, np.array(cols).T, validate=False)
    return Correspondence(first.src, module, lam), starts


def corr_close(c1: Correspondence, c2: Correspondence, eps: float = EPS) -> bool:
    if c1 is c2:
        return True
    return (
        c1.src == c2.src
        and c1.module == c2.module
        and frob(c1.lam.matrix - c2.lam.matrix) <= eps
    )


def is_full_corr(corr: Correspondence, *, eps: float = EPS) -> bool:
    """True iff span{ <x, y> } = dst, by per-block span rank.

    Literal rank of the family { <e_ra, e_sb> } for small blocks; above size
    6 the family factors as { delta_rs e_ab }, so the span is the whole block
    exactly when the multiplicity is nonzero.
    """
    for k, (m, n) in enumerate(zip(corr.module.mult, corr.dst.blocks)):
        if n <= 6:
            vecs = []
            for r in range(m):
                for a in range(n):
                    for s in range(m):
                        for b in range(n):
                            g = np.zeros((n, n), dtype=complex)
                            if r == s:
                                g[a, b] = 1.0
                            vecs.append(g.ravel())
            rk = matrix_rank_tol(np.array(vecs), eps) if vecs else 0
            if rk < n * n:
                return False
        else:
            if m == 0:
                return False
    return True


class CorrIso:
    """Unitary intertwiner of correspondences, one matrix per base block.

    Block k maps C^{m_k x n_k} by x -> U_k x, so right linearity holds by
    construction; the constructor checks unitarity and that the left actions
    are intertwined.
    """

    __slots__ = ("src", "dst", "blocks")

    def __init__(self, src: Correspondence, dst: Correspondence, blocks, *, eps: float = EPS):
        if src.src != dst.src or src.dst != dst.dst:
            raise EndpointMismatch("intertwiner endpoints disagree")
        blocks = tuple(np.asarray(u, dtype=complex) for u in blocks)
        if len(blocks) != src.dst.nblocks:
            raise ShapeMismatch("one block per base block required")
        for k, u in enumerate(blocks):
            if u.shape != (dst.module.mult[k], src.module.mult[k]):
                raise ShapeMismatch(
                    f"block {k} has shape {u.shape}, expected"
                    f" ({dst.module.mult[k]}, {src.module.mult[k]})"
                )
        worst = 0.0
        for k, u in enumerate(blocks):
            if u.shape[0] != u.shape[1]:
                raise NotUnitary(f"block {k} is not square: {u.shape}")
            m = u.shape[0]
            worst = max(worst, frob(u.conj().T @ u - np.eye(m)))
            worst = max(worst, frob(u @ u.conj().T - np.eye(m)))
        if worst > eps:
            raise NotUnitary("blocks are not unitary", worst)
        worst = 0.0
        a_dim = src.src.dim
        cs, cd = src.module.compacts, dst.module.compacts
        for k in src.module.kept:
            u = blocks[k]
            ps = src.module.compact_pos(k)
            m_s, o_s = cs.blocks[ps], cs.offset(ps)
            s3 = src.lam.matrix[o_s : o_s + m_s * m_s, :].reshape(m_s, m_s, a_dim)
            pd = dst.module.compact_pos(k)
            if pd is None:
                d3 = np.zeros((u.shape[0], m_s, a_dim), dtype=complex)
            else:
                m_d, o_d = cd.blocks[pd], cd.offset(pd)
                d3 = dst.lam.matrix[o_d : o_d + m_d * m_d, :].reshape(m_d, m_d, a_dim)
            lhs = np.tensordot(u, s3, axes=(1, 0))
            rhs = np.tensordot(d3, u, axes=(1, 0)).transpose(0, 2, 1)
            if lhs.size:
                per_p = np.sqrt((np.abs(lhs - rhs) ** 2).sum(axis=(0, 1)))
                worst = max(worst, float(per_p.max()))
        if worst > eps:
            raise NotIntertwining("left actions are not intertwined", worst)
        self.src = src
        self.dst = dst
        self.blocks = blocks

    @classmethod
    def _trusted(cls, src, dst, blocks):
        """Skip validation; only for adjoints and composites of valid isos,
        whose residuals are the originals' up to rounding."""
        out = cls.__new__(cls)
        out.src, out.dst, out.blocks = src, dst, tuple(blocks)
        return out

    def apply(self, x: ModElement) -> ModElement:
        if x.module != self.src.module:
            raise BaseMismatch("element not in the source module")
        return ModElement(self.dst.module, [u @ m for u, m in zip(self.blocks, x.mats)])

    def inverse(self) -> "CorrIso":
        return CorrIso._trusted(self.dst, self.src, [u.conj().T for u in self.blocks])

    def dense(self) -> np.ndarray:
        """Full matrix on module coordinates, blockdiag of U_k (x) I_{n_k}."""
        d = np.zeros((self.dst.module.dim, self.src.module.dim), dtype=complex)
        for k, u in enumerate(self.blocks):
            n = self.src.dst.blocks[k]
            o_r, o_c = self.dst.module.offset(k), self.src.module.offset(k)
            m_r, m_c = u.shape
            d[o_r : o_r + m_r * n, o_c : o_c + m_c * n] = np.kron(u, np.eye(n))
        return d

    def __repr__(self):
        return f"CorrIso({self.src!r} ~ {self.dst!r})"


def make_iso(src: Correspondence, dst: Correspondence, data, *, eps: float = EPS) -> CorrIso:
    """Build an intertwiner from per-block unitaries or one dense matrix.

    A dense (dst.dim x src.dim) matrix is accepted only if it has the right
    block-diagonal U_k (x) I_{n_k} shape; anything else raises NotRightLinear.
    """
    if isinstance(data, np.ndarray) and data.ndim == 2 and data.shape == (
        dst.module.dim,
        src.module.dim,
    ):
        blocks = []
        for k, n in enumerate(src.dst.blocks):
            m_c, m_r = src.module.mult[k], dst.module.mult[k]
            o_r, o_c = dst.module.offset(k), src.module.offset(k)
            sub = data[o_r : o_r + m_r * n, o_c : o_c + m_c * n]
            u = np.zeros((m_r, m_c), dtype=complex)
            if n > 0 and m_r > 0 and m_c > 0:
                t = sub.reshape(m_r, n, m_c, n)
                u = np.einsum("rcsc->rs", t) / n
            blocks.append(u)
        rebuilt = CorrIso.__new__(CorrIso)
        rebuilt.src, rebuilt.dst, rebuilt.blocks = src, dst, tuple(blocks)
        resid = frob(data - rebuilt.dense())
        if resid > eps:
            raise NotRightLinear("matrix does not commute with the right action", resid)
        return CorrIso(src, dst, blocks, eps=eps)
    return CorrIso(src, dst, list(data), eps=eps)


def compose_isos(u: CorrIso, v: CorrIso, *, eps: float = EPS) -> CorrIso:
    """u after v."""
    if not corr_close(v.dst, u.src, eps):
        raise EndpointMismatch("intertwiners are not composable")
    return CorrIso._trusted(v.src, u.dst, [a @ b for a, b in zip(u.blocks, v.blocks)])


def iso_distance(u: CorrIso, v: CorrIso) -> float:
    if u.src.module != v.src.module or u.dst.module != v.dst.module:
        raise ShapeMismatch("intertwiners live on different modules")
    return max(
        (frob(a - b) for a, b in zip(u.blocks, v.blocks)),
        default=0.0,
    )


class TensorProduct:
    """E (x)_B F together with its coordinate bookkeeping.

    Fields:
      left, right    the two correspondences
      corr           the resulting correspondence src(E) -> dst(F)
      r              integer matrix of ranks r_jk over (B block, C block)
      onb[j][k]      q_k x r_jk orthonormalising coefficients R_jk
      proj[j][k]     the projection P_jk = lambda_F(e^(j)_11) at block k

    Block-k rows are grouped (j, a, t): j the B block, a < m_j(E),
    t < r_jk, all ascending.
    """

    def __init__(self, left: Correspondence, right: Correspondence, *, eps: float = EPS):
        if left.dst != right.src:
            raise EndpointMismatch("tensor product needs matching middle algebra")
        self.left, self.right = left, right
        self.eps = eps
        b, c = left.dst, right.dst
        e_mod, f_mod = left.module, right.module
        nb, nc = b.nblocks, c.nblocks
        self.r = np.zeros((nb, nc), dtype=np.int64)
        self.proj = [[None] * nc for _ in range(nb)]
        self.onb = [[None] * nc for _ in range(nb)]
        for j in range(nb):
            e11 = b.matrix_unit(j, 0, 0)
            for k in range(nc):
                p = right.lam_block(e11, k)
                self.proj[j][k] = p
                rjk = gram_onb(p, eps)
                self.onb[j][k] = rjk
                self.r[j, k] = rjk.shape[1]
            pos = f_mod.compact_pos
            expected = [
                int(right.lam.mult_matrix[j, pos(k)]) if pos(k) is not None else 0
                for k in range(nc)
            ]
            if list(self.r[j]) != expected:
                raise ShapeMismatch(
                    f"rank of lambda(e11) disagrees with multiplicities at row {j}"
                )
        q = tuple(
            int(sum(e_mod.mult[j] * self.r[j, k] for j in range(nb))) for k in range(nc)
        )
        if all(x == 0 for x in q):
            raise InvalidAlgebra("tensor product collapses to the zero module")
        module = make_module(c, q)
        self.module = module
        self.corr = Correspondence(left.src, module, self._left_action(module))

    def _left_action(self, module: HilbertModule) -> StarHom:
        """lambda_G = (multiplicity embedding K(E) -> K(G)) . lambda_E.

        The embedding places T in K(E) block j as blockwise T (x) I_{r_jk};
        it is an exact 0/1 isometric unital *-hom, so the composite needs no
        numerical re-validation.
        """
        e_mod = self.left.module
        ke, kg = e_mod.compacts, module.compacts
        # each row of the embedding holds at most one 1, so iota @ lam is a
        # row gather of lam's matrix
        rows, cols = [], []
        for p, jp, a, a2 in ke.basis_triples():
            j = e_mod.kept[jp]
            for kp, k in enumerate(module.kept):
                rjk = int(self.r[j, k])
                if rjk == 0:
                    continue
                o = self.row_start(k, j, 0)
                size = kg.blocks[kp]
                base = kg.offset(kp)
                for t in range(rjk):
                    rows.append(base + (o + a * rjk + t) * size + (o + a2 * rjk + t))
                    cols.append(p)
        iota_mult = np.zeros((ke.nblocks, kg.nblocks), dtype=np.int64)
        for jp, j in enumerate(e_mod.kept):
            for kp, k in enumerate(module.kept):
                iota_mult[jp, kp] = self.r[j, k]
        lam_e = self.left.lam
        matrix = np.zeros((kg.dim, lam_e.matrix.shape[1]), dtype=complex)
        if rows:
            matrix[np.asarray(rows, dtype=np.intp)] = lam_e.matrix[np.asarray(cols, dtype=np.intp)]
        matrix.setflags(write=False)
        return StarHom(
            self.left.src, kg, matrix, lam_e.mult_matrix @ iota_mult, lam_e.unital
        )

    def row_start(self, k: int, j: int, a: int) -> int:
        """First block-k row of group (j, a)."""
        e_mult = self.left.module.mult
        o = sum(e_mult[j2] * int(self.r[j2, k]) for j2 in range(j))
        return o + a * int(self.r[j, k])

    def embed(self, j: int, a: int, w: ModElement) -> ModElement:
        """Coordinates of e^(j)_{a1} (x) w."""
        if w.module != self.right.module:
            raise BaseMismatch("second factor not in the right module")
        z = self.module.zero()
        for k in self.module.kept:
            rjk = int(self.r[j, k])
            if rjk == 0:
                continue
            o = self.row_start(k, j, a)
            z.mats[k][o : o + rjk, :] = (
                self.onb[j][k].conj().T @ self.proj[j][k] @ w.mats[k]
            )
        return z

    def section(self, z: ModElement):
        """Representative { (j, a) -> F element } with sum of embeds == z."""
        if z.module != self.module:
            raise BaseMismatch("element not in the tensor module")
        out = {}
        for j in range(self.left.dst.nblocks):
            for a in range(self.left.module.mult[j]):
                w = self.right.module.zero()
                for k in self.module.kept:
                    rjk = int(self.r[j, k])
                    if rjk == 0:
                        continue
                    o = self.row_start(k, j, a)
                    w.mats[k][:, :] = self.onb[j][k] @ z.mats[k][o : o + rjk, :]
                out[(j, a)] = w
        return out

    def pure_tensor(self, x: ModElement, y: ModElement) -> ModElement:
        """Coordinates of x (x) y for arbitrary module elements."""
        if x.module != self.left.module:
            raise BaseMismatch("first factor not in the left module")
        b = self.left.dst
        z = self.module.zero()
        for j, (m, n) in enumerate(zip(self.left.module.mult, b.blocks)):
            for a in range(m):
                row = b.zero()
                row.mats[j][0, :] = x.mats[j][a, :]
                w = self.right.left_mul(row, y)
                z = z + self.embed(j, a, w)
        return z


def tensor_corrs(left: Correspondence, right: Correspondence, *, eps: float = EPS) -> TensorProduct:
    return TensorProduct(left, right, eps=eps)


def tensor_iso(
    u: CorrIso, v: CorrIso, tp_src: TensorProduct, tp_dst: TensorProduct, *, eps: float = EPS
) -> CorrIso:
    """u (x) v as an intertwiner tp_src.corr -> tp_dst.corr."""
    if not corr_close(u.src, tp_src.left, eps) or not corr_close(v.src, tp_src.right, eps):
        raise EndpointMismatch("factors do not match the source tensor product")
    if not corr_close(u.dst, tp_dst.left, eps) or not corr_close(v.dst, tp_dst.right, eps):
        raise EndpointMismatch("factors do not match the target tensor product")
    c = tp_src.right.dst
    blocks = []
    for k in range(c.nblocks):
        qk = tp_src.module.mult[k]
        out = np.zeros((tp_dst.module.mult[k], qk), dtype=complex)
        for j in range(tp_src.left.dst.nblocks):
            rjk = int(tp_src.r[j, k])
            if rjk == 0 or tp_src.left.module.mult[j] == 0:
                continue
            t_jk = (
                tp_dst.onb[j][k].conj().T
                @ tp_dst.proj[j][k]
                @ v.blocks[k]
                @ tp_src.onb[j][k]
            )
            o_s = tp_src.row_start(k, j, 0)
            o_d = tp_dst.row_start(k, j, 0)
            m = tp_src.left.module.mult[j]
            blk = np.kron(u.blocks[j], t_jk)
            out[o_d : o_d + blk.shape[0], o_s : o_s + blk.shape[1]] = blk
        blocks.append(out)
    return CorrIso(tp_src.corr, tp_dst.corr, blocks, eps=eps)


def iso_from_action(tp: TensorProduct, dst: Correspondence, action, *, eps: float = EPS) -> CorrIso:
    """Intertwiner out of a tensor product, given its action on the
    reduced family: action(j, a, w) must return the image of
    e^(j)_{a1} (x) w in dst's module.  Right linearity fills in the rest."""
    c = tp.module.base
    blocks = []
    for k in range(c.nblocks):
        qk = tp.module.mult[k]
        out = np.zeros((dst.module.mult[k], qk), dtype=complex)
        for j in range(tp.left.dst.nblocks):
            rjk = int(tp.r[j, k])
            if rjk == 0:
                continue
            for a in range(tp.left.module.mult[j]):
                o = tp.row_start(k, j, a)
                for t in range(rjk):
                    w = tp.right.module.zero()
                    w.mats[k][:, 0] = tp.onb[j][k][:, t]
                    img = action(j, a, w)
                    out[:, o + t] = img.mats[k][:, 0]
        blocks.append(out)
    return CorrIso(tp.corr, dst, blocks, eps=eps)


def left_unitor(tp: TensorProduct, *, eps: float = EPS) -> CorrIso:
    """id_A (x) E -> E, a (x) x -> lambda_E(a) x."""
    a = tp.left.src
    if not corr_close(tp.left, identity_corr(a), eps):
        raise EndpointMismatch("left factor is not the identity correspondence")
    e = tp.right

    def action(i, s, w):
        row = a.zero()
        row.mats[i][s, 0] = 1.0
        return e.left_mul(row, w)

    return iso_from_action(tp, e, action, eps=eps)


def right_unitor(tp: TensorProduct, *, eps: float = EPS) -> CorrIso:
    """E (x) id_B -> E, x (x) b -> x b.  An exact coordinate renaming."""
    b = tp.left.dst
    if not corr_close(tp.right, identity_corr(b), eps):
        raise EndpointMismatch("right factor is not the identity correspondence")
    e = tp.left

    def action(j, a, w):
        x = e.module.zero()
        x.mats[j][a, :] = w.mats[j][0, :]
        return x

    return iso_from_action(tp, e, action, eps=eps)


def associator(
    tp_ef: TensorProduct,
    tp_efg: TensorProduct,
    tp_fg: TensorProduct,
    tp_e_fg: TensorProduct,
    *,
    eps: float = EPS,
) -> CorrIso:
    """(E (x) F) (x) G -> E (x) (F (x) G) on the given tensor data."""
    if tp_efg.left is not tp_ef.corr and not corr_close(tp_efg.left, tp_ef.corr, eps):
        raise EndpointMismatch("tp_efg must tensor tp_ef.corr with G")
    if tp_e_fg.right is not tp_fg.corr and not corr_close(tp_e_fg.right, tp_fg.corr, eps):
        raise EndpointMismatch("tp_e_fg must tensor E with tp_fg.corr")
    e_mod = tp_ef.left.module
    d = tp_efg.module.base
    nb = tp_ef.left.dst.nblocks
    nc = tp_ef.module.base.nblocks
    blocks = []
    for l in range(d.nblocks):
        src_q = tp_efg.module.mult[l]
        dst_q = tp_e_fg.module.mult[l]
        out = np.zeros((dst_q, src_q), dtype=complex)
        for j in range(nb):
            if e_mod.mult[j] == 0:
                continue
            r_dst = int(tp_e_fg.r[j, l])
            cols = []
            col_meta = []
            for j2 in range(nc):
                r1 = int(tp_ef.r[j, j2])
                r2 = int(tp_efg.r[j2, l])
                for t in range(r1):
                    w = tp_ef.right.module.zero()
                    w.mats[j2][:, 0] = tp_ef.onb[j][j2][:, t]
                    for t2 in range(r2):
                        y = tp_efg.right.module.zero()
                        y.mats[l][:, 0] = tp_efg.onb[j2][l][:, t2]
                        v = tp_fg.pure_tensor(w, y)
                        img = tp_e_fg.embed(j, 0, v)
                        o = tp_e_fg.row_start(l, j, 0)
                        cols.append(img.mats[l][o : o + r_dst, 0])
                        col_meta.append((j2, t, t2))
            if not cols:
                continue
            m_j = np.column_stack(cols)
            for a in range(e_mod.mult[j]):
                o_dst = tp_e_fg.row_start(l, j, a)
                for ci, (j2, t, t2) in enumerate(col_meta):
                    alpha = tp_ef.row_start(j2, j, a) + t
                    src_row = tp_efg.row_start(l, j2, alpha) + t2
                    out[o_dst : o_dst + r_dst, src_row] = m_j[:, ci]
        blocks.append(out)
    return CorrIso(tp_efg.corr, tp_e_fg.corr, blocks, eps=eps)
