"""Simplices of correspondences, simplicial operators, horn filling.

An n-simplex holds algebras A_0..A_n, correspondences E_ij for every pair
i <= j, and intertwiners u_ijk: E_ij (x) E_jk -> E_ik for every triple
i <= j <= k.  Normality is part of validity: E_ii is the identity
correspondence and the degenerate intertwiners are the canonical unitors.
The composition constraint is the pentagon condition over all weakly
increasing quadruples.

Monotone reindexing (apply_map) is pure dictionary lookup, so shared faces
of two simplices are shared objects, byte for byte; horn assembly relies on
that and rejects faces that merely look alike numerically.

Fills: an inner (2,1)-horn composes its two edges; (3,k)-horns solve the
pentagon for the one missing intertwiner, where k = 3 extracts it from a
tensor-with-identity ansatz (well posed because the last edge is an
equivalence); a special (2,2)-horn inverts its last edge through the Morita
counit.  Dimension-4 horns carry no new data and are filled by assembling
the shared boundary and revalidating.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .algebra import FdCstarAlgebra, StarHom, compose_homs, identity_hom
from .bicategory import equivalence_inverse, gamma_multiplicativity, gamma_of_hom
from .errors import (
    EndpointMismatch,
    IncompatibleFaces,
    NotMonotone,
    PentagonViolated,
    ShapeMismatch,
    Unfillable,
    UnitConditionViolated,
)
from .linalg import EPS, frob
from .modules import (
    CorrIso,
    Correspondence,
    TensorProduct,
    associator,
    compose_isos,
    corr_close,
    identity_corr,
    iso_distance,
    left_unitor,
    right_unitor,
    tensor_corrs,
    tensor_iso,
)

__all__ = [
    "NCorrSimplex",
    "HornSpec",
    "make_simplex",
    "validate_simplex",
    "apply_map",
    "face",
    "degeneracy",
    "identity_iso",
    "simplex_close",
    "structural_hash",
    "gamma_simplex",
    "pentagon_residual",
    "fill_inner_horn",
    "fill_special_outer_horn",
]


def identity_iso(corr: Correspondence) -> CorrIso:
    return CorrIso(corr, corr, [np.eye(m, dtype=complex) for m in corr.module.mult])


class NCorrSimplex:
    """A simplex of the correspondence nerve; immutable after construction.

    ``edges[(i, j)]`` for i <= j, ``cells[(i, j, k)]`` for i <= j <= k.
    Construction checks shapes and endpoints only; numeric validity is
    validate_simplex's job.
    """

    __slots__ = ("n", "algebras", "edges", "cells", "_tps", "_shash")

    def __init__(self, algebras, edges, cells):
        algebras = tuple(algebras)
        n = len(algebras) - 1
        if n < 0:
            raise ShapeMismatch("a simplex needs at least one vertex")
        for i in range(n + 1):
            for j in range(i, n + 1):
                e = edges.get((i, j))
                if e is None:
                    raise ShapeMismatch(f"missing edge ({i}, {j})")
                if e.src != algebras[i] or e.dst != algebras[j]:
                    raise EndpointMismatch(f"edge ({i}, {j}) endpoints disagree")
                for k in range(j, n + 1):
                    if (i, j, k) not in cells:
                        raise ShapeMismatch(f"missing cell ({i}, {j}, {k})")
        for (i, j, k), u in cells.items():
            if not (0 <= i <= j <= k <= n):
                raise ShapeMismatch(f"cell index ({i}, {j}, {k}) out of range")
            if u.dst is not edges[(i, k)] and not corr_close(u.dst, edges[(i, k)]):
                raise EndpointMismatch(f"cell ({i}, {j}, {k}) does not land on edge ({i}, {k})")
        self.n = n
        self.algebras = algebras
        self.edges = dict(edges)
        self.cells = dict(cells)
        self._tps = {}
        self._shash = None

    def edge(self, i: int, j: int) -> Correspondence:
        return self.edges[(i, j)]

    def cell(self, i: int, j: int, k: int) -> CorrIso:
        return self.cells[(i, j, k)]

    def tp(self, i: int, j: int, k: int) -> TensorProduct:
        """Cached E_ij (x) E_jk."""
        key = (i, j, k)
        if key not in self._tps:
            self._tps[key] = tensor_corrs(self.edges[(i, j)], self.edges[(j, k)])
        return self._tps[key]

    def tp_left(self, i, j, k, l) -> TensorProduct:
        key = ("L", i, j, k, l)
        if key not in self._tps:
            self._tps[key] = tensor_corrs(self.tp(i, j, k).corr, self.edges[(k, l)])
        return self._tps[key]

    def tp_right(self, i, j, k, l) -> TensorProduct:
        key = ("R", i, j, k, l)
        if key not in self._tps:
            self._tps[key] = tensor_corrs(self.edges[(i, j)], self.tp(j, k, l).corr)
        return self._tps[key]

    def __repr__(self):
        return f"NCorrSimplex(n={self.n}, algebras={[a.blocks for a in self.algebras]})"


def make_simplex(algebras, edges, cells, *, eps: float = EPS, validate: bool = True) -> NCorrSimplex:
    """Assemble a simplex from its strict data.

    ``edges`` needs the pairs i < j, ``cells`` the triples i < j < k; the
    identity edges and the canonical unitor cells are filled in here.
    """
    algebras = tuple(algebras)
    n = len(algebras) - 1
    full_edges = dict(edges)
    for i in range(n + 1):
        full_edges.setdefault((i, i), identity_corr(algebras[i]))
    full_cells = dict(cells)
    _materialize_unit_cells(full_edges, full_cells, n, eps)
    s = NCorrSimplex(algebras, full_edges, full_cells)
    if validate:
        validate_simplex(s, eps=eps)
    return s


def _materialize_unit_cells(edges, cells, n, eps):
    for i in range(n + 1):
        for k in range(i, n + 1):
            if i == k:
                if (i, i, i) not in cells:
                    t = tensor_corrs(edges[(i, i)], edges[(i, i)], eps=eps)
                    cells[(i, i, i)] = left_unitor(t, eps=eps)
                continue
            if (i, i, k) not in cells:
                t = tensor_corrs(edges[(i, i)], edges[(i, k)], eps=eps)
                cells[(i, i, k)] = left_unitor(t, eps=eps)
            if (i, k, k) not in cells:
                t = tensor_corrs(edges[(i, k)], edges[(k, k)], eps=eps)
                cells[(i, k, k)] = right_unitor(t, eps=eps)


def pentagon_residual(s: NCorrSimplex, i, j, k, l) -> float:
    """Residual of u_ikl . (u_ijk (x) id) = u_ijl . (id (x) u_jkl) . assoc
    as maps (E_ij (x) E_jk) (x) E_kl -> E_il."""
    t_ij_jk = s.tp(i, j, k)
    t_jk_kl = s.tp(j, k, l)
    t_l = s.tp_left(i, j, k, l)
    t_r = s.tp_right(i, j, k, l)
    t_ik_kl = s.tp(i, k, l)
    t_ij_jl = s.tp(i, j, l)
    ass = associator(t_ij_jk, t_l, t_jk_kl, t_r)
    lhs = compose_isos(
        s.cells[(i, k, l)],
        tensor_iso(s.cells[(i, j, k)], identity_iso(s.edges[(k, l)]), t_l, t_ik_kl),
    )
    rhs = compose_isos(
        s.cells[(i, j, l)],
        compose_isos(
            tensor_iso(identity_iso(s.edges[(i, j)]), s.cells[(j, k, l)], t_r, t_ij_jl), ass
        ),
    )
    return iso_distance(lhs, rhs)


def validate_simplex(s: NCorrSimplex, *, eps: float = EPS) -> NCorrSimplex:
    """Check normality and the pentagon condition; raise on failure."""
    n = s.n
    for i in range(n + 1):
        if not corr_close(s.edges[(i, i)], identity_corr(s.algebras[i]), eps):
            raise UnitConditionViolated(i, i)
        r = iso_distance(s.cells[(i, i, i)], left_unitor(s.tp(i, i, i), eps=eps))
        if r > eps:
            raise UnitConditionViolated(i, i, r)
    for i in range(n + 1):
        for k in range(i + 1, n + 1):
            r = iso_distance(s.cells[(i, i, k)], left_unitor(s.tp(i, i, k), eps=eps))
            if r > eps:
                raise UnitConditionViolated(i, k, r)
            r = iso_distance(s.cells[(i, k, k)], right_unitor(s.tp(i, k, k), eps=eps))
            if r > eps:
                raise UnitConditionViolated(i, k, r)
    for i in range(n + 1):
        for j in range(i, n + 1):
            for k in range(j, n + 1):
                for l in range(k, n + 1):
                    r = pentagon_residual(s, i, j, k, l)
                    if r > eps:
                        raise PentagonViolated(i, j, k, l, r)
    return s


def apply_map(s: NCorrSimplex, phi) -> NCorrSimplex:
    """Reindex along a weakly increasing phi: [m] -> [n]; pure lookup."""
    phi = tuple(int(x) for x in phi)
    if any(b < a for a, b in zip(phi, phi[1:])):
        raise NotMonotone(f"{list(phi)} is not weakly increasing")
    if phi and (phi[0] < 0 or phi[-1] > s.n):
        raise NotMonotone(f"{list(phi)} does not land in [0, {s.n}]")
    m = len(phi) - 1
    algebras = tuple(s.algebras[p] for p in phi)
    edges = {}
    cells = {}
    for a in range(m + 1):
        for b in range(a, m + 1):
            edges[(a, b)] = s.edges[(phi[a], phi[b])]
            for c in range(b, m + 1):
                cells[(a, b, c)] = s.cells[(phi[a], phi[b], phi[c])]
    return NCorrSimplex(algebras, edges, cells)


def face(s: NCorrSimplex, i: int) -> NCorrSimplex:
    return apply_map(s, [x for x in range(s.n + 1) if x != i])


def degeneracy(s: NCorrSimplex, i: int) -> NCorrSimplex:
    return apply_map(s, sorted(list(range(s.n + 1)) + [i]))


def simplex_close(s1: NCorrSimplex, s2: NCorrSimplex, eps: float = EPS) -> bool:
    if s1.n != s2.n or s1.algebras != s2.algebras:
        return False
    for key, e in s1.edges.items():
        if not corr_close(e, s2.edges[key], eps):
            return False
    for key, u in s1.cells.items():
        if u.src.module != s2.cells[key].src.module:
            return False
        if iso_distance(u, s2.cells[key]) > eps:
            return False
    return True


def _h_update(h, obj):
    if isinstance(obj, np.ndarray):
        a = np.ascontiguousarray(obj)
        h.update(repr(a.shape).encode())
        h.update(a.tobytes())
    elif isinstance(obj, FdCstarAlgebra):
        h.update(b"alg" + repr(obj.blocks).encode())
    elif isinstance(obj, Correspondence):
        h.update(b"corr")
        _h_update(h, obj.src)
        _h_update(h, obj.dst)
        h.update(repr(obj.module.mult).encode())
        _h_update(h, obj.lam.matrix)
    elif isinstance(obj, CorrIso):
        h.update(b"iso")
        _h_update(h, obj.src)
        _h_update(h, obj.dst)
        for u in obj.blocks:
            _h_update(h, u)
    elif isinstance(obj, StarHom):
        h.update(b"hom")
        _h_update(h, obj.src)
        _h_update(h, obj.dst)
        _h_update(h, obj.matrix)
    elif isinstance(obj, NCorrSimplex):
        h.update(f"simplex{obj.n}".encode())
        for a in obj.algebras:
            _h_update(h, a)
        for key in sorted(obj.edges):
            h.update(repr(key).encode())
            _h_update(h, obj.edges[key])
        for key in sorted(obj.cells):
            h.update(repr(key).encode())
            _h_update(h, obj.cells[key])
    elif isinstance(obj, (tuple, list)):
        h.update(b"(")
        for x in obj:
            _h_update(h, x)
        h.update(b")")
    else:
        h.update(repr(obj).encode())


def structural_hash(obj) -> str:
    """Hash of the exact bytes of an object's defining data.

    Equal hashes mean bit-identical data. Used for memo keys, trace ids and
    exact-recovery checks; tolerance-based comparisons live in simplex_close.
    """
    if isinstance(obj, NCorrSimplex) and obj._shash is not None:
        return obj._shash
    h = hashlib.sha1()
    _h_update(h, obj)
    digest = h.hexdigest()
    if isinstance(obj, NCorrSimplex):
        obj._shash = digest
    return digest


def gamma_simplex(phis, *, eps: float = EPS, validate: bool = True, composites=None) -> NCorrSimplex:
    """The simplex of a composable chain A_0 -> A_1 -> ... -> A_n.

    E_ij is the correspondence of the composite hom over (i, j], and the
    u_ijk are the canonical multiplicativity intertwiners. ``composites``
    may supply the hom for (i, j) directly; callers holding a coherent
    family use it so that shared edges come out bit-identical instead of
    being recomposed per chain.
    """
    phis = list(phis)
    n = len(phis)
    algebras = [phis[0].src] if n else []
    for f in phis:
        if algebras and f.src != algebras[-1]:
            raise EndpointMismatch("chain is not composable")
        algebras.append(f.dst)
    if not n:
        raise ShapeMismatch("gamma_simplex needs at least one hom")
    composites = composites or {}
    comp = {}
    for i in range(n + 1):
        comp[(i, i)] = identity_hom(algebras[i])
        for j in range(i + 1, n + 1):
            given = composites.get((i, j))
            if given is not None:
                if given.src != algebras[i] or given.dst != algebras[j]:
                    raise EndpointMismatch(f"supplied composite ({i}, {j}) has wrong endpoints")
                comp[(i, j)] = given
            else:
                comp[(i, j)] = (
                    phis[i] if j == i + 1 else compose_homs(phis[j - 1], comp[(i, j - 1)], eps=eps)
                )
    edges = {}
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            edges[(i, j)] = gamma_of_hom(comp[(i, j)], eps=eps)
    cells = {}
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            for k in range(j + 1, n + 1):
                t = tensor_corrs(edges[(i, j)], edges[(j, k)], eps=eps)
                cells[(i, j, k)] = gamma_multiplicativity(
                    comp[(j, k)], comp[(i, j)], t, comp=comp[(i, k)], target=edges[(i, k)], eps=eps
                )
    return make_simplex(algebras, edges, cells, eps=eps, validate=validate)


@dataclass(frozen=True)
class HornSpec:
    """The horn L^n_k: all faces of an n-simplex except the k-th.

    ``faces[j]`` for j != k are (n-1)-simplices; they must agree on shared
    sub-faces up to rounding.
    """

    n: int
    k: int
    faces: dict

    def __post_init__(self):
        if not (0 <= self.k <= self.n):
            raise ShapeMismatch(f"horn index {self.k} out of range for n={self.n}")
        expected = set(range(self.n + 1)) - {self.k}
        if set(self.faces) != expected:
            raise ShapeMismatch(f"horn needs faces {sorted(expected)}, got {sorted(self.faces)}")
        for j, f in self.faces.items():
            if f.n != self.n - 1:
                raise ShapeMismatch(f"face {j} has dimension {f.n}, expected {self.n - 1}")


def _coface(j: int, n: int):
    """delta_j: [n-1] -> [n], skipping j."""
    return [x for x in range(n + 1) if x != j]


def _merge_face_data(n: int, faces: dict, eps: float = EPS, prefer=None):
    """Pool edges and cells from the faces.

    Shared data must agree within eps; the copy from the lowest face index
    is kept, or from face ``prefer`` when given. Bit-exact agreement is not
    required because values reaching a horn along different composition
    paths differ by rounding.
    """
    algebras = [None] * (n + 1)
    edges, cells = {}, {}
    owner = {}
    for j in sorted(faces, key=lambda x: (x != prefer, x)):
        f = faces[j]
        d = _coface(j, n)
        for a in range(n):
            if algebras[d[a]] is None:
                algebras[d[a]] = f.algebras[a]
            elif algebras[d[a]] != f.algebras[a]:
                raise IncompatibleFaces(f"faces disagree on vertex {d[a]}")
        for (a, b), e in f.edges.items():
            key = (d[a], d[b])
            if key in edges:
                if edges[key] is not e and not corr_close(edges[key], e, eps):
                    raise IncompatibleFaces(
                        f"faces {owner[key]} and {j} disagree on edge {key}"
                    )
            else:
                edges[key] = e
                owner[key] = j
        for (a, b, c), u in f.cells.items():
            key = (d[a], d[b], d[c])
            if key in cells:
                prev = cells[key]
                if prev is not u:
                    if (
                        prev.src.module != u.src.module
                        or prev.dst.module != u.dst.module
                        or iso_distance(prev, u) > eps
                    ):
                        raise IncompatibleFaces(
                            f"faces {owner[key]} and {j} disagree on cell {key}"
                        )
            else:
                cells[key] = u
                owner[key] = j
    return algebras, edges, cells


def _assemble(algebras, edges, cells, eps, validate):
    n = len(algebras) - 1
    full_edges = dict(edges)
    for i in range(n + 1):
        full_edges.setdefault((i, i), identity_corr(algebras[i]))
    full_cells = dict(cells)
    _materialize_unit_cells(full_edges, full_cells, n, eps)
    s = NCorrSimplex(algebras, full_edges, full_cells)
    if validate:
        validate_simplex(s, eps=eps)
    return s


def fill_inner_horn(horn: HornSpec, *, eps: float = EPS, validate: bool = True) -> NCorrSimplex:
    """Fill L^n_k for 0 < k < n, n in {2, 3, 4}.

    n=2 composes the edges, n=3 solves the pentagon for the missing
    intertwiner, n=4 assembles the boundary (no new data at that dimension).
    """
    n, k = horn.n, horn.k
    if not (0 < k < n):
        raise Unfillable(f"L^{n}_{k} is not an inner horn")
    algebras, edges, cells = _merge_face_data(horn.n, horn.faces, eps)
    if n == 2:
        t = tensor_corrs(edges[(0, 1)], edges[(1, 2)], eps=eps)
        edges[(0, 2)] = t.corr
        cells[(0, 1, 2)] = identity_iso(t.corr)
        return _assemble(algebras, edges, cells, eps, validate)
    if n == 3:
        cells[_missing_triple(k)] = _solve_pentagon(edges, cells, k, eps)
        return _assemble(algebras, edges, cells, eps, validate)
    if n == 4:
        return _assemble(algebras, edges, cells, eps, validate)
    raise Unfillable(f"horn dimension {n} not supported")


def fill_special_outer_horn(
    horn: HornSpec, witness=None, *, eps: float = EPS, validate: bool = True
) -> NCorrSimplex:
    """Fill L^n_n whose last edge is an equivalence, n in {2, 3, 4}.

    ``witness`` may carry the equivalence data of E_{n-1,n}; it is computed
    (and the edge thereby certified) when absent.
    """
    n, k = horn.n, horn.k
    if k != n:
        raise Unfillable(f"L^{n}_{k} is not a special outer horn")
    algebras, edges, cells = _merge_face_data(horn.n, horn.faces, eps)
    if n == 4:
        return _assemble(algebras, edges, cells, eps, validate)
    last = edges[(n - 1, n)]
    if witness is None or not corr_close(witness.corr, last, eps):
        witness = equivalence_inverse(last, eps=eps)
    if n == 2:
        inv = witness.inverse
        t1 = tensor_corrs(edges[(0, 2)], inv, eps=eps)
        e01 = t1.corr
        edges[(0, 1)] = e01
        t2 = tensor_corrs(e01, edges[(1, 2)], eps=eps)
        t_r = witness.tp_right
        t_e_fg = tensor_corrs(edges[(0, 2)], t_r.corr, eps=eps)
        ass = associator(t1, t2, t_r, t_e_fg)
        t_unit = tensor_corrs(edges[(0, 2)], identity_corr(algebras[2]), eps=eps)
        mid = tensor_iso(
            identity_iso(edges[(0, 2)]), witness.counit_right, t_e_fg, t_unit, eps=eps
        )
        u = compose_isos(right_unitor(t_unit, eps=eps), compose_isos(mid, ass))
        cells[(0, 1, 2)] = u
        return _assemble(algebras, edges, cells, eps, validate)
    if n == 3:
        cells[(0, 1, 2)] = _solve_pentagon(edges, cells, 3, eps)
        return _assemble(algebras, edges, cells, eps, validate)
    raise Unfillable(f"horn dimension {n} not supported")


def assemble_boundary(
    faces: dict, *, eps: float = EPS, validate: bool = True, prefer=None
) -> NCorrSimplex:
    """Rebuild an n-simplex from all n+1 of its faces.

    From dimension 3 up every edge and cell lives on some face, so the
    boundary pins the simplex down completely; shared data must agree
    within eps. A 2-boundary leaves the triangle's intertwiner free and is
    rejected. ``prefer`` names a face whose copy of shared data wins the
    vote; callers that later extract that face get its bits back unchanged.
    """
    n = len(faces) - 1
    if set(faces) != set(range(n + 1)):
        raise ShapeMismatch(f"boundary needs faces 0..{n}, got {sorted(faces)}")
    for j, f in faces.items():
        if f.n != n - 1:
            raise ShapeMismatch(f"face {j} has dimension {f.n}, expected {n - 1}")
    if n < 3:
        raise Unfillable("a boundary below dimension 3 does not determine the simplex")
    algebras, edges, cells = _merge_face_data(n, faces, eps, prefer)
    return _assemble(algebras, edges, cells, eps, validate)


def _missing_triple(k: int):
    return tuple(x for x in range(4) if x != k)


def _solve_pentagon(edges, cells, k, eps):
    """The unique u making the (0,1,2,3) pentagon commute, k in {1, 2, 3}."""
    e01, e12, e23 = edges[(0, 1)], edges[(1, 2)], edges[(2, 3)]
    e02, e13 = edges[(0, 2)], edges[(1, 3)]
    t01_12 = tensor_corrs(e01, e12, eps=eps)
    t12_23 = tensor_corrs(e12, e23, eps=eps)
    t_l = tensor_corrs(t01_12.corr, e23, eps=eps)
    t_r = tensor_corrs(e01, t12_23.corr, eps=eps)
    t02_23 = tensor_corrs(e02, e23, eps=eps)
    t01_13 = tensor_corrs(e01, e13, eps=eps)
    ass = associator(t01_12, t_l, t12_23, t_r)
    if k == 1:
        right = compose_isos(
            cells[(0, 1, 3)],
            compose_isos(
                tensor_iso(identity_iso(e01), cells[(1, 2, 3)], t_r, t01_13, eps=eps), ass
            ),
        )
        left_part = tensor_iso(cells[(0, 1, 2)], identity_iso(e23), t_l, t02_23, eps=eps)
        return compose_isos(right, left_part.inverse())
    if k == 2:
        left = compose_isos(
            cells[(0, 2, 3)],
            tensor_iso(cells[(0, 1, 2)], identity_iso(e23), t_l, t02_23, eps=eps),
        )
        step = tensor_iso(identity_iso(e01), cells[(1, 2, 3)], t_r, t01_13, eps=eps)
        return compose_isos(left, compose_isos(ass.inverse(), step.inverse()))
    # k == 3: solve u (x) id = T for u: E01 (x) E12 -> E02
    right = compose_isos(
        cells[(0, 1, 3)],
        compose_isos(
            tensor_iso(identity_iso(e01), cells[(1, 2, 3)], t_r, t01_13, eps=eps), ass
        ),
    )
    t_mat = compose_isos(cells[(0, 2, 3)].inverse(), right)
    a2 = e02.dst
    blocks = []
    for j in range(a2.nblocks):
        m_dst = e02.module.mult[j]
        m_src = t01_12.module.mult[j]
        num = np.zeros((m_dst, m_src), dtype=complex)
        den = 0
        for kk in range(e23.dst.nblocks):
            r = int(t02_23.r[j, kk])
            if r == 0:
                continue
            den += r
            tb = t_mat.blocks[kk]
            o_d = t02_23.row_start(kk, j, 0)
            o_s = t_l.row_start(kk, j, 0)
            for a in range(m_dst):
                for a2_ in range(m_src):
                    num[a, a2_] += np.trace(
                        tb[o_d + a * r : o_d + (a + 1) * r, o_s + a2_ * r : o_s + (a2_ + 1) * r]
                    )
        if m_dst > 0 and den == 0:
            raise Unfillable(f"extraction ill posed at block {j}: last edge acts by zero")
        blocks.append(num / den if den else num)
    u = CorrIso(t01_12.corr, e02, blocks, eps=eps)
    resid = iso_distance(tensor_iso(u, identity_iso(e23), t_l, t02_23, eps=eps), t_mat)
    if resid > eps:
        raise IncompatibleFaces("no fill matches the given faces", resid)
    return u
