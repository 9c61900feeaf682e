"""Barycentric chains over a base simplex and the induced algebra diagram.

Two combinatorial simplex types live here.  A SubsetChain is a nested list
of nonempty subsets of {0..n}: the simplices of the subdivided n-simplex.
An AugChain prepends a weakly increasing run of vertices i_0 <= ... <= i_k,
all members of the first subset; these augmented chains interpolate between
the subdivided simplex (no vertex prefix) and the simplex itself (no subset
suffix).  Faces drop an entry, degeneracies double one, and monotone
reindexing acts entrywise, turning any subset that collapses to a point
into a vertex entry.

On the algebra side, a subset S with top vertex m picks out the module
E_S = (+)_{v in S} E_{v m} over A_m; A_S is its compact operators.  For
S inside T the hom f_ST: A_S -> A_T conjugates by the summand inclusion
when the tops agree, and otherwise sends x to x (x) id along the connecting
edge E_{m M}, rewritten through the structure cells and included.
subdivision_functor materializes all of these and checks
f_TU . f_ST = f_SU for every nested triple.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import FdCstarAlgebra, StarHom, compose_homs, identity_hom, make_star_hom
from .errors import (
    DimensionTooLarge,
    FunctorialityViolated,
    IndexOutOfRange,
    NotMonotone,
    NotNested,
    ShapeViolation,
)
from .linalg import EPS
from .modules import HilbertModule, direct_sum_modules
from .nerve import NCorrSimplex

__all__ = [
    "SubsetChain",
    "AugChain",
    "face",
    "degeneracy",
    "is_nondegenerate",
    "phi_star",
    "enumerate_sd",
    "enumerate_csd",
    "SdVertexData",
    "module_E_S",
    "connecting_hom",
    "SdFunctor",
    "subdivision_functor",
]

_MAX_N = 4


def _check_subset(s) -> tuple:
    t = tuple(int(x) for x in s)
    if not t:
        raise ShapeViolation("subsets must be nonempty")
    if any(b <= a for a, b in zip(t, t[1:])):
        raise ShapeViolation(f"subset {t} must be strictly increasing")
    if t[0] < 0:
        raise ShapeViolation("vertices must be nonnegative")
    return t


@dataclass(frozen=True)
class SubsetChain:
    """A nested chain of nonempty subsets; dimension = number of entries - 1."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(_check_subset(s) for s in self.entries)
        if not entries:
            raise ShapeViolation("a chain needs at least one entry")
        for a, b in zip(entries, entries[1:]):
            if not set(a) <= set(b):
                raise NotNested(f"{a} is not contained in {b}")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return len(self.entries) - 1


@dataclass(frozen=True)
class AugChain:
    """A vertex run followed by a nested subset run.

    Vertices are weakly increasing and contained in the first subset; the
    subsets have at least two elements each.  Either run may be empty, not
    both.
    """

    vertices: tuple
    subsets: tuple

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vertices)
        ss = tuple(_check_subset(s) for s in self.subsets)
        if not vs and not ss:
            raise ShapeViolation("a chain needs at least one entry")
        if any(v < 0 for v in vs):
            raise ShapeViolation("vertices must be nonnegative")
        if any(b < a for a, b in zip(vs, vs[1:])):
            raise ShapeViolation(f"vertices {vs} must be weakly increasing")
        for s in ss:
            if len(s) < 2:
                raise ShapeViolation(f"subset entries need at least two elements, got {s}")
        for a, b in zip(ss, ss[1:]):
            if not set(a) <= set(b):
                raise NotNested(f"{a} is not contained in {b}")
        if vs and ss and not set(vs) <= set(ss[0]):
            raise ShapeViolation(f"vertices {vs} must lie in the first subset {ss[0]}")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "subsets", ss)

    @property
    def dim(self) -> int:
        return len(self.vertices) + len(self.subsets) - 1

    def entry(self, i: int):
        nv = len(self.vertices)
        if i < nv:
            return self.vertices[i]
        return self.subsets[i - nv]


def _entries(chain):
    if isinstance(chain, SubsetChain):
        return list(chain.entries)
    return list(chain.vertices) + list(chain.subsets)


def _rebuild(chain, entries):
    if isinstance(chain, SubsetChain):
        return SubsetChain(tuple(entries))
    vs = tuple(e for e in entries if isinstance(e, int))
    ss = tuple(e for e in entries if not isinstance(e, int))
    return AugChain(vs, ss)


def face(chain, i: int):
    """Drop entry i."""
    entries = _entries(chain)
    if len(entries) == 1:
        raise ShapeViolation("a point has no faces")
    if not 0 <= i < len(entries):
        raise IndexOutOfRange(f"face index {i} out of range for dimension {len(entries) - 1}")
    del entries[i]
    return _rebuild(chain, entries)


def degeneracy(chain, i: int):
    """Double entry i."""
    entries = _entries(chain)
    if not 0 <= i < len(entries):
        raise IndexOutOfRange(
            f"degeneracy index {i} out of range for dimension {len(entries) - 1}"
        )
    entries.insert(i, entries[i])
    return _rebuild(chain, entries)


def is_nondegenerate(chain) -> bool:
    entries = _entries(chain)
    return all(a != b for a, b in zip(entries, entries[1:]))


def phi_star(phi, chain):
    """Reindex a chain along a weakly increasing vertex map.

    ``phi`` maps by position; subset entries whose image is a single vertex
    become vertex entries, which keeps the result well formed (only an
    initial run of subsets can collapse).
    """
    phi = [int(x) for x in phi]
    if any(b < a for a, b in zip(phi, phi[1:])):
        raise NotMonotone(f"{phi} is not weakly increasing")

    def img(v):
        if not 0 <= v < len(phi):
            raise IndexOutOfRange(f"vertex {v} outside the domain of the map")
        return phi[v]

    if isinstance(chain, SubsetChain):
        return SubsetChain(tuple(tuple(sorted({img(v) for v in s})) for s in chain.entries))
    vs = [img(v) for v in chain.vertices]
    ss = []
    for s in chain.subsets:
        t = tuple(sorted({img(v) for v in s}))
        if len(t) == 1:
            if ss:
                raise ShapeViolation("a collapsed subset after a surviving one")
            vs.append(t[0])
        else:
            ss.append(t)
    return AugChain(tuple(vs), tuple(ss))


def _nonempty_subsets(n):
    out = []
    for mask in range(1, 1 << (n + 1)):
        out.append(tuple(i for i in range(n + 1) if mask >> i & 1))
    return out


def enumerate_sd(n: int):
    """Nondegenerate chains of the subdivided n-simplex, keyed by dimension."""
    if n > _MAX_N:
        raise DimensionTooLarge(f"n = {n} exceeds the supported bound {_MAX_N}")
    if n < 0:
        raise ShapeViolation("n must be nonnegative")
    subsets = _nonempty_subsets(n)
    by_dim: dict = {}
    stack = [(s,) for s in subsets]
    while stack:
        c = stack.pop()
        by_dim.setdefault(len(c) - 1, []).append(SubsetChain(c))
        for t in subsets:
            if len(t) > len(c[-1]) and set(c[-1]) < set(t):
                stack.append(c + (t,))
    for d in by_dim:
        by_dim[d].sort(key=lambda ch: ch.entries)
    return by_dim


def enumerate_csd(n: int):
    """Nondegenerate augmented chains, keyed by dimension."""
    if n > _MAX_N:
        raise DimensionTooLarge(f"n = {n} exceeds the supported bound {_MAX_N}")
    if n < 0:
        raise ShapeViolation("n must be nonnegative")
    big = [s for s in _nonempty_subsets(n) if len(s) >= 2]
    suffixes = [()]
    stack = [(s,) for s in big]
    while stack:
        c = stack.pop()
        suffixes.append(c)
        for t in big:
            if len(t) > len(c[-1]) and set(c[-1]) < set(t):
                stack.append(c + (t,))
    by_dim: dict = {}
    for suf in suffixes:
        pool = suf[0] if suf else tuple(range(n + 1))
        for r in range(0, len(pool) + 1):
            if r == 0 and not suf:
                continue
            for vs in _increasing_tuples(pool, r):
                ch = AugChain(vs, suf)
                by_dim.setdefault(ch.dim, []).append(ch)
    for d in by_dim:
        by_dim[d].sort(key=lambda ch: (ch.vertices, ch.subsets))
    return by_dim


def _increasing_tuples(pool, r):
    if r == 0:
        yield ()
        return
    for i, v in enumerate(pool):
        for rest in _increasing_tuples(pool[i + 1 :], r - 1):
            yield (v,) + rest


@dataclass(frozen=True)
class SdVertexData:
    """E_S with its bookkeeping: summand order and row offsets per block."""

    subset: tuple
    module: HilbertModule
    algebra: FdCstarAlgebra
    starts: tuple

    @property
    def top(self) -> int:
        return self.subset[-1]


def module_E_S(sigma: NCorrSimplex, subset) -> SdVertexData:
    """E_S = (+)_{v in S} E_{v, max S} as a module over the top algebra."""
    s = _check_subset(subset)
    if s[-1] > sigma.n:
        raise IndexOutOfRange(f"subset {s} does not fit in [0, {sigma.n}]")
    m = s[-1]
    mods = [sigma.edges[(v, m)].module for v in s]
    module, starts = direct_sum_modules(mods)
    return SdVertexData(s, module, module.compacts, starts)


def _inclusion_rows(data_s: SdVertexData, data_t: SdVertexData):
    """Position of each E_S summand inside E_T (same vertex, same top)."""
    pos = {v: idx for idx, v in enumerate(data_t.subset)}
    return [pos[v] for v in data_s.subset]


def _summand_isometries(data_s, data_t, base):
    """Same-top case: W[l][j] of shape (dim_T, dim_S, 1), the 0/1 summand
    inclusion; only j = l is populated since E_S and E_T share the base."""
    rows = _inclusion_rows(data_s, data_t)
    out = []
    for l in range(base.nblocks):
        q_s = data_s.module.mult[l]
        if q_s == 0:
            out.append({})
            continue
        w = np.zeros((data_t.module.mult[l], q_s, 1), dtype=complex)
        for si, ti in enumerate(rows):
            o_s = data_s.starts[si][l]
            nxt = (
                data_s.starts[si + 1][l]
                if si + 1 < len(data_s.starts)
                else data_s.module.mult[l]
            )
            o_t = data_t.starts[ti][l]
            for a in range(nxt - o_s):
                w[o_t + a, o_s + a, 0] = 1.0
        out.append({l: w})
    return out


def _tensor_isometries(sigma, data_s, data_t, base):
    """Top-change case: W[l][j] of shape (dim_T, dim_S, r_jl).

    W[:, p, rho] is the E_T coordinate vector of (row p of E_S) tensored
    with the rho-th range vector of the connecting edge, rewritten through
    the structure cell of its summand; f(e_pq) = sum_rho w_p,rho w_q,rho*.
    """
    m = data_s.subset[-1]
    top = data_t.subset[-1]
    rows = _inclusion_rows(data_s, data_t)
    mid = sigma.algebras[m]
    out = []
    for l in range(base.nblocks):
        per_j = {}
        dim_t = data_t.module.mult[l]
        for j in range(mid.nblocks):
            q_s = data_s.module.mult[j]
            if q_s == 0:
                continue
            r = int(sigma.tp(data_s.subset[0], m, top).r[j, l])
            if r == 0:
                continue
            w = np.zeros((dim_t, q_s, r), dtype=complex)
            for si, v in enumerate(data_s.subset):
                tp = sigma.tp(v, m, top)
                mv = sigma.edges[(v, m)].module.mult[j]
                if mv == 0:
                    continue
                u_l = sigma.cells[(v, m, top)].blocks[l]
                o_t = data_t.starts[rows[si]][l]
                o_s = data_s.starts[si][j]
                src0 = tp.row_start(l, j, 0)
                for a in range(mv):
                    w[o_t : o_t + u_l.shape[0], o_s + a, :] = u_l[
                        :, src0 + a * r : src0 + (a + 1) * r
                    ]
            per_j[j] = w
        out.append(per_j)
    return out


def connecting_hom(
    sigma: NCorrSimplex, sub_s, sub_t, *, eps: float = EPS, validate: bool = True
) -> StarHom:
    """f_ST: A_S -> A_T for nested subsets S inside T of the base simplex."""
    data_s = module_E_S(sigma, sub_s)
    data_t = module_E_S(sigma, sub_t)
    return _connecting(sigma, data_s, data_t, eps, validate)


def _connecting(sigma, data_s, data_t, eps, validate) -> StarHom:
    s, t = data_s.subset, data_t.subset
    if not set(s) <= set(t):
        raise NotNested(f"{s} is not contained in {t}")
    if s == t:
        return identity_hom(data_s.algebra)
    base = sigma.algebras[t[-1]]
    if s[-1] == t[-1]:
        mats = _summand_isometries(data_s, data_t, base)
    else:
        mats = _tensor_isometries(sigma, data_s, data_t, base)
    ks, kt = data_s.module, data_t.module
    cols = []
    for tr in data_s.algebra.basis_triples():
        j, p, q = tr[1], tr[2], tr[3]
        jk = ks.kept[j]
        y = kt.compacts.zero()
        for lt, l in enumerate(kt.kept):
            w = mats[l].get(jk)
            if w is None:
                continue
            y.mats[lt][:, :] += w[:, p, :] @ w[:, q, :].conj().T
        cols.append(y.to_vec())
    matrix = np.stack(cols, axis=1)
    return make_star_hom(data_s.algebra, data_t.algebra, matrix, eps=eps, validate=validate)


@dataclass(frozen=True)
class SdFunctor:
    """The diagram S -> A_S, (S <= T) -> f_ST over one base simplex."""

    base: NCorrSimplex
    subsets: tuple
    data: dict
    homs: dict

    def algebra(self, s) -> FdCstarAlgebra:
        return self.data[_check_subset(s)].algebra

    def hom(self, s, t) -> StarHom:
        return self.homs[(_check_subset(s), _check_subset(t))]


def subdivision_functor(
    sigma: NCorrSimplex, *, eps: float = EPS, validate: bool = True, check: bool = True
) -> SdFunctor:
    """All vertex algebras and connecting homs of the subdivided simplex.

    With ``check`` on, every nested triple S <= T <= U is tested for
    f_TU . f_ST = f_SU.
    """
    if sigma.n > _MAX_N:
        raise DimensionTooLarge(f"n = {sigma.n} exceeds the supported bound {_MAX_N}")
    subsets = tuple(_nonempty_subsets(sigma.n))
    data = {s: module_E_S(sigma, s) for s in subsets}
    homs = {}
    for s in subsets:
        for t in subsets:
            if set(s) <= set(t):
                homs[(s, t)] = _connecting(sigma, data[s], data[t], eps, validate)
    if check:
        for s in subsets:
            for t in subsets:
                if not set(s) <= set(t):
                    continue
                for u in subsets:
                    if not set(t) <= set(u):
                        continue
                    lhs = compose_homs(homs[(t, u)], homs[(s, t)], eps=eps)
                    resid = float(np.abs(lhs.matrix - homs[(s, u)].matrix).max())
                    if resid > eps:
                        raise FunctorialityViolated(s, t, u, resid)
    return SdFunctor(sigma, subsets, data, homs)
