"""Extending corner-inverting functors from algebras to the correspondence nerve.

Subdividing an n-simplex of the nerve yields a diagram of algebras indexed
by nonempty subsets of {0..n}.  A functor F into a quasi-category target
that sends corner embeddings to equivalences extends from that diagram to
every chain of the augmented subdivision, one horn fill at a time: chains
whose support misses a vertex are pulled back from the faces, chains with a
constant vertex prefix come straight from F, and the rest are produced by
the staged recursion below (inner horns while the prefix is shorter than
the chain, one special outer horn at the very end, certified by the corner
embedding's inverse).  The value on the plain chain (0..n) is then the
extension's value on the simplex itself.

Two targets are provided: the nerve of integer matrices (K-theory) and the
correspondence nerve itself.  `extend_relative` runs the same machinery on
prisms to extend a homotopy between two such functors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nerve
from . import subdivision as sdv
from .algebra import StarHom, compose_homs
from .bicategory import (
    equivalence_inverse,
    find_corr_iso,
    gamma_of_hom,
    is_equivalence,
)
from .errors import (
    BoundaryMismatch,
    CompatibilityViolated,
    CorrLabError,
    DimensionTooLarge,
    IncompatibleFaces,
    NotMonotone,
    NotMultiplicative,
    NotStableOnDiagram,
    OracleFillFailed,
    ShapeMismatch,
    Unfillable,
    ValidationError,
)
from .linalg import EPS, int_inverse
from .modules import tensor_corrs
from .nerve import HornSpec, gamma_simplex, make_simplex, structural_hash
from .subdivision import AugChain, subdivision_functor

__all__ = [
    "QCOracle",
    "K0Simplex",
    "K0Oracle",
    "NCorrOracle",
    "CstFunctor",
    "k0_matrix",
    "k0_functor",
    "gamma_functor",
    "BarExtension",
    "extend_bar_G",
    "bar_F",
    "CstHomotopy",
    "RelExtension",
    "extend_relative",
]


# ---------------------------------------------------------------------------
# target oracles


class QCOracle:
    """What the extension recursion needs from a target quasi-category.

    Simplices are opaque values; the engine only moves them along faces and
    degeneracies, compares them, and asks for horn fills.  Fills must return
    simplices carrying the supplied faces exactly.  ``max_fill_dim`` bounds
    the dimension the oracle can fill and is checked before a run starts.
    """

    max_fill_dim: int = 0

    def face(self, s, i: int):
        raise NotImplementedError

    def degeneracy(self, s, i: int):
        raise NotImplementedError

    def equal(self, s, t) -> bool:
        raise NotImplementedError

    def is_equivalence(self, edge) -> bool:
        raise NotImplementedError

    def fill_inner_horn(self, horn: HornSpec):
        raise NotImplementedError

    def fill_special_outer_horn(self, horn: HornSpec, certificate=None):
        raise NotImplementedError

    def fill_boundary(self, faces: dict):
        raise NotImplementedError

    def guided_fill(self, horn: HornSpec, certificate=None, preferred_face=None):
        """Return a fill whose missing face equals the preferred one, or None."""
        return None


class K0Simplex:
    """A simplex in the nerve of free abelian groups and integer matrices.

    Vertices carry a rank, the edge (i,j) carries an integer matrix of shape
    (rank_j, rank_i), and higher cells carry no data: a simplex is exactly a
    strictly compatible family, M_ik = M_jk M_ij.  Identity edges on the
    diagonal are implicit.
    """

    __slots__ = ("n", "ranks", "mats")

    def __init__(self, ranks, mats, *, validate: bool = True):
        ranks = tuple(int(r) for r in ranks)
        if not ranks or any(r < 0 for r in ranks):
            raise ShapeMismatch(f"bad rank vector {ranks}")
        n = len(ranks) - 1
        store = {}
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                try:
                    m = np.asarray(mats[(i, j)], dtype=np.int64)
                except KeyError:
                    raise ShapeMismatch(f"edge ({i},{j}) is missing") from None
                if m.shape != (ranks[j], ranks[i]):
                    raise ShapeMismatch(
                        f"edge ({i},{j}) has shape {m.shape}, expected ({ranks[j]}, {ranks[i]})"
                    )
                store[(i, j)] = m
        self.n = n
        self.ranks = ranks
        self.mats = store
        if validate:
            for i, j, k in itertools.combinations(range(n + 1), 3):
                if not np.array_equal(store[(j, k)] @ store[(i, j)], store[(i, k)]):
                    raise NotMultiplicative(f"edges ({i},{j},{k}) do not compose")

    def edge(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.eye(self.ranks[i], dtype=np.int64)
        return self.mats[(i, j)]

    def apply_map(self, phi) -> "K0Simplex":
        phi = [int(x) for x in phi]
        if any(b < a for a, b in zip(phi, phi[1:])):
            raise NotMonotone(f"vertex map {phi} is not monotone")
        if phi and (phi[0] < 0 or phi[-1] > self.n):
            raise NotMonotone(f"vertex map {phi} leaves 0..{self.n}")
        ranks = tuple(self.ranks[p] for p in phi)
        m = len(phi) - 1
        mats = {
            (a, b): self.edge(phi[a], phi[b])
            for a in range(m + 1)
            for b in range(a + 1, m + 1)
        }
        return K0Simplex(ranks, mats, validate=False)

    def face(self, i: int) -> "K0Simplex":
        return self.apply_map([x for x in range(self.n + 1) if x != i])

    def degeneracy(self, i: int) -> "K0Simplex":
        return self.apply_map(list(range(i + 1)) + list(range(i, self.n + 1)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, K0Simplex):
            return NotImplemented
        return self.ranks == other.ranks and all(
            np.array_equal(self.mats[k], other.mats[k]) for k in self.mats
        )

    def __repr__(self) -> str:
        return f"K0Simplex(n={self.n}, ranks={self.ranks})"


def _merge_k0_faces(n: int, faces: dict):
    """Pool ranks and edge matrices of the faces; shared data must agree."""
    ranks = [None] * (n + 1)
    mats = {}
    for j, f in faces.items():
        d = [x for x in range(n + 1) if x != j]
        for a in range(n):
            if ranks[d[a]] is None:
                ranks[d[a]] = f.ranks[a]
            elif ranks[d[a]] != f.ranks[a]:
                raise IncompatibleFaces(f"faces disagree on the rank at vertex {d[a]}")
        for (a, b), m in f.mats.items():
            key = (d[a], d[b])
            if key in mats:
                if not np.array_equal(mats[key], m):
                    raise IncompatibleFaces(f"faces disagree on edge {key}")
            else:
                mats[key] = m
    return ranks, mats


class K0Oracle(QCOracle):
    """The nerve of integer matrices as an extension target.

    Being the nerve of an ordinary category it has unique inner fills, and a
    final-edge fill needs exactly an integer inverse, which doubles as the
    equivalence certificate.
    """

    max_fill_dim = 8

    def face(self, s: K0Simplex, i: int) -> K0Simplex:
        return s.face(i)

    def degeneracy(self, s: K0Simplex, i: int) -> K0Simplex:
        return s.degeneracy(i)

    def equal(self, s: K0Simplex, t: K0Simplex) -> bool:
        return s == t

    def is_equivalence(self, edge: K0Simplex) -> bool:
        try:
            int_inverse(edge.edge(0, 1))
        except ValueError:
            return False
        return True

    def fill_inner_horn(self, horn: HornSpec) -> K0Simplex:
        n, k = horn.n, horn.k
        if not (0 < k < n):
            raise Unfillable(f"L^{n}_{k} is not an inner horn")
        ranks, mats = _merge_k0_faces(n, horn.faces)
        if n == 2:
            mats[(0, 2)] = mats[(1, 2)] @ mats[(0, 1)]
        return self._build(ranks, mats)

    def fill_special_outer_horn(self, horn: HornSpec, certificate=None) -> K0Simplex:
        n, k = horn.n, horn.k
        if k != n:
            raise Unfillable(f"L^{n}_{k} is not a special outer horn")
        ranks, mats = _merge_k0_faces(n, horn.faces)
        if n == 2:
            last = mats[(1, 2)]
            inv = certificate
            if (
                inv is None
                or inv.shape != (last.shape[1], last.shape[0])
                or not np.array_equal(inv @ last, np.eye(last.shape[1], dtype=np.int64))
            ):
                try:
                    inv = int_inverse(last)
                except ValueError as err:
                    raise Unfillable(f"last edge is not invertible: {err}") from err
            mats[(0, 1)] = inv @ mats[(0, 2)]
        return self._build(ranks, mats)

    def fill_boundary(self, faces: dict) -> K0Simplex:
        n = len(faces) - 1
        if n < 2:
            raise Unfillable("a boundary below dimension 2 does not determine the simplex")
        ranks, mats = _merge_k0_faces(n, faces)
        return self._build(ranks, mats)

    def guided_fill(self, horn: HornSpec, certificate=None, preferred_face=None):
        # fills here are unique, so guiding can only ever confirm
        if horn.k == horn.n:
            fill = self.fill_special_outer_horn(horn, certificate)
        else:
            fill = self.fill_inner_horn(horn)
        if preferred_face is not None and not self.equal(fill.face(horn.k), preferred_face):
            return None
        return fill

    @staticmethod
    def _build(ranks, mats) -> K0Simplex:
        try:
            return K0Simplex(ranks, mats)
        except NotMultiplicative as err:
            raise IncompatibleFaces(f"no simplex matches the given faces: {err}") from err


class NCorrOracle(QCOracle):
    """The correspondence nerve as its own extension target."""

    max_fill_dim = 4

    def __init__(self, *, eps: float = EPS, validate: bool = True):
        self.eps = eps
        self.validate = validate

    def face(self, s, i: int):
        return nerve.face(s, i)

    def degeneracy(self, s, i: int):
        return nerve.degeneracy(s, i)

    def equal(self, s, t) -> bool:
        return s is t or nerve.simplex_close(s, t, self.eps)

    def is_equivalence(self, edge) -> bool:
        return is_equivalence(edge.edge(0, 1), eps=self.eps)

    def fill_inner_horn(self, horn: HornSpec):
        return nerve.fill_inner_horn(horn, eps=self.eps, validate=self.validate)

    def fill_special_outer_horn(self, horn: HornSpec, certificate=None):
        return nerve.fill_special_outer_horn(
            horn, witness=certificate, eps=self.eps, validate=self.validate
        )

    def fill_boundary(self, faces: dict):
        return nerve.assemble_boundary(faces, eps=self.eps, validate=self.validate)

    def guided_fill(self, horn: HornSpec, certificate=None, preferred_face=None):
        """Land the missing face on the supplied simplex when it fits.

        At dimension 2 the new edge is taken verbatim and an intertwiner to
        the given composite edge is searched for; from dimension 3 up the
        preferred face completes the boundary and the assembly is validated.
        Any failure falls back to the unguided fill by returning None.
        """
        if preferred_face is None or horn.k != horn.n:
            return None
        try:
            if horn.n == 2:
                e01 = preferred_face.edge(0, 1)
                e12 = horn.faces[0].edge(0, 1)
                e02 = horn.faces[1].edge(0, 1)
                t = tensor_corrs(e01, e12, eps=self.eps)
                u = find_corr_iso(t.corr, e02, eps=self.eps)
                if u is None:
                    return None
                algebras = [
                    preferred_face.algebras[0],
                    preferred_face.algebras[1],
                    horn.faces[0].algebras[1],
                ]
                return make_simplex(
                    algebras,
                    {(0, 1): e01, (0, 2): e02, (1, 2): e12},
                    {(0, 1, 2): u},
                    eps=self.eps,
                    validate=self.validate,
                )
            if horn.n in (3, 4):
                faces = dict(horn.faces)
                faces[horn.k] = preferred_face
                return nerve.assemble_boundary(
                    faces, eps=self.eps, validate=self.validate, prefer=horn.k
                )
        except ValidationError:
            return None
        return None


# ---------------------------------------------------------------------------
# algebra-level functors


@dataclass(frozen=True)
class CstFunctor:
    """An algebra-level functor into an oracle target.

    ``vertex`` and ``chain`` produce the target simplices of objects and of
    composable hom chains (a chain of one hom is the image edge).
    ``certificate`` returns invertibility data for the image of a marked
    corner-like hom and raises when the hom is not invertible in the target.
    ``section``, when set, proposes the exact simplex a guided run should
    land on for a given input simplex, or None to decline.
    """

    name: str
    vertex: Callable
    chain: Callable
    certificate: Callable
    section: Callable = None

    def edge(self, phi: StarHom):
        return self.chain([phi])


def k0_matrix(phi: StarHom) -> np.ndarray:
    """The induced map on K-theory classes, dst blocks by src blocks."""
    return np.ascontiguousarray(phi.mult_matrix.T)


def k0_functor(diagram=None) -> CstFunctor:
    """K-theory as a target: objects to Z^blocks, homs to multiplicity matrices.

    ``diagram`` may list homs meant to become equivalences; their integer
    inverses are computed up front and a failure raises NotStableOnDiagram.
    """

    def vertex(a):
        return K0Simplex((a.nblocks,), {}, validate=False)

    def chain(homs, composites=None):
        homs = list(homs)
        if not homs:
            raise ShapeMismatch("a chain needs at least one hom")
        for f, g in zip(homs, homs[1:]):
            if f.dst != g.src:
                raise ShapeMismatch("homs do not compose")
        ranks = (homs[0].src.nblocks,) + tuple(h.dst.nblocks for h in homs)
        steps = [k0_matrix(h) for h in homs]
        mats = {}
        for i in range(len(ranks)):
            acc = np.eye(ranks[i], dtype=np.int64)
            for j in range(i + 1, len(ranks)):
                acc = steps[j - 1] @ acc
                mats[(i, j)] = acc
        return K0Simplex(ranks, mats)

    def certificate(phi):
        m = k0_matrix(phi)
        try:
            return int_inverse(m)
        except ValueError as err:
            raise NotStableOnDiagram(
                f"hom has no integer inverse on K-theory classes: {err}"
            ) from err

    if diagram is not None:
        for phi in diagram:
            certificate(phi)
    return CstFunctor("K0", vertex, chain, certificate)


def gamma_functor(arrows=(), *, eps: float = EPS) -> CstFunctor:
    """The nerve itself as a target, acting by the correspondence of a hom.

    Composites of the listed arrows (up to three long, folded left to right)
    are indexed by their image correspondence, so the section can recognise
    simplices produced from the diagram and a guided run lands on them
    exactly.
    """
    homs = list(arrows)
    level = {1: homs}
    for length in (2, 3):
        level[length] = [
            compose_homs(f, g, eps=eps)
            for g in level[length - 1]
            for f in homs
            if f.src == g.dst
        ]
    table = {}
    for length in (1, 2, 3):
        for h in level[length]:
            table.setdefault(structural_hash(gamma_of_hom(h, eps=eps)), h)

    def vertex(a):
        return make_simplex([a], {}, {}, eps=eps)

    def chain(homs_, composites=None):
        return gamma_simplex(homs_, eps=eps, composites=composites)

    def certificate(phi):
        return equivalence_inverse(gamma_of_hom(phi, eps=eps), eps=eps)

    def section(sig):
        if sig.n == 0:
            return sig
        chain_homs = []
        for i in range(sig.n):
            h = table.get(structural_hash(sig.edge(i, i + 1)))
            if h is None:
                return None
            chain_homs.append(h)
        cand = gamma_simplex(chain_homs, eps=eps, validate=False)
        if structural_hash(cand) == structural_hash(sig):
            return sig
        return None

    return CstFunctor("Gamma", vertex, chain, certificate, section)


# ---------------------------------------------------------------------------
# the extension recursion


def _chain_str(c: AugChain) -> str:
    parts = [str(v) for v in c.vertices]
    parts += ["{" + ",".join(map(str, s)) + "}" for s in c.subsets]
    return "(" + ", ".join(parts) + ")"


def _cert_id(cert) -> str:
    if cert is None:
        return "none"
    if isinstance(cert, np.ndarray):
        return structural_hash(cert)[:12]
    corr = getattr(cert, "corr", None)
    inv = getattr(cert, "inverse", None)
    if corr is not None and inv is not None:
        return structural_hash((corr, inv))[:12]
    return structural_hash(np.frombuffer(repr(cert).encode(), dtype=np.uint8))[:12]


def _chains_to_top(cur: frozenset, top: frozenset):
    """All strictly nested subset chains from cur up to top, inclusive."""
    cur_t = tuple(sorted(cur))
    if cur == top:
        return [(cur_t,)]
    out = []
    extras = sorted(top - cur)
    for r in range(1, len(extras) + 1):
        for add in itertools.combinations(extras, r):
            for tail in _chains_to_top(cur | set(add), top):
                out.append((cur_t,) + tail)
    return out


class _Builder:
    """One extension run over the augmented subdivision of a single simplex."""

    def __init__(self, sigma, functor, oracle, memo, guided, eps):
        self.sigma = sigma
        self.functor = functor
        self.oracle = oracle
        self.memo = memo
        self.guided = guided
        self.eps = eps
        self.full = tuple(range(sigma.n + 1))
        self.full_set = set(self.full)
        self.sd = subdivision_functor(sigma, eps=eps, validate=False, check=True)
        self.vals = {}
        self.assigned = {}
        self.gcache = {}
        self.trace = []

    # -- value resolution ---------------------------------------------------

    def value(self, c: AugChain):
        hit = self.vals.get(c)
        if hit is not None:
            return hit
        d = c.dim
        for i in range(d):
            if c.entry(i) == c.entry(i + 1):
                out = self.oracle.degeneracy(self.value(sdv.face(c, i)), i)
                self.vals[c] = out
                return out
        support = set(c.subsets[-1]) if c.subsets else set(c.vertices)
        if support != self.full_set:
            sub = sorted(support)
            pos = {v: i for i, v in enumerate(sub)}
            rel = AugChain(
                tuple(pos[x] for x in c.vertices),
                tuple(tuple(pos[x] for x in s) for s in c.subsets),
            )
            child = extend_bar_G(
                nerve.apply_map(self.sigma, sub),
                self.functor,
                self.oracle,
                self.memo,
                guided=self.guided,
                eps=self.eps,
            )
            out = child.value(rel)
        elif not c.vertices:
            out = self._g_value(c.subsets)
        elif len(c.vertices) == 1:
            out = self._g_value(((c.vertices[0],),) + c.subsets)
        else:
            raise CompatibilityViolated(
                f"chain {_chain_str(c)} was needed before its fill"
            )
        self.vals[c] = out
        return out

    def _g_value(self, subsets: tuple):
        hit = self.gcache.get(subsets)
        if hit is not None:
            return hit
        if len(subsets) == 1:
            out = self.functor.vertex(self.sd.algebra(subsets[0]))
        else:
            # composites come from the subdivision's own hom table so that
            # the same geometric edge has the same bits in every chain
            comp = {
                (i, j): self.sd.hom(subsets[i], subsets[j])
                for i in range(len(subsets))
                for j in range(i + 1, len(subsets))
            }
            out = self.functor.chain(
                [self.sd.hom(s, t) for s, t in zip(subsets, subsets[1:])],
                composites=comp,
            )
        self.gcache[subsets] = out
        return out

    # -- the staged fills ---------------------------------------------------

    def run(self) -> "BarExtension":
        n = self.sigma.n
        for k in range(1, n + 1):
            targets = []
            for prefix in itertools.combinations(range(n + 1), k + 1):
                for suffix in _chains_to_top(frozenset(prefix), frozenset(self.full)):
                    targets.append(AugChain(prefix, suffix))
            targets.sort(key=lambda c: (c.dim, c.vertices, c.subsets))
            for c in targets:
                self._fill(c, k)
        self._check_compat()
        return BarExtension(self)

    def _fill(self, c: AugChain, k: int):
        ell = c.dim
        kk = k + 1
        missing_chain = sdv.face(c, kk)
        if missing_chain in self.assigned or c in self.assigned:
            raise CompatibilityViolated(
                f"fill target {_chain_str(c)} or its face was assigned twice"
            )
        faces = {}
        for j in range(ell + 1):
            if j == kk:
                continue
            fc = sdv.face(c, j)
            if j <= k and len(fc.vertices) != k:
                raise CompatibilityViolated(
                    f"face {j} of {_chain_str(c)} has the wrong prefix length"
                )
            if fc.dim != ell - 1:
                raise CompatibilityViolated(
                    f"face {j} of {_chain_str(c)} has the wrong dimension"
                )
            faces[j] = self.value(fc)
        horn = HornSpec(ell, kk, faces)
        special = kk == ell
        cert = None
        cert_id = "none"
        guided_used = False
        try:
            if special:
                corner = self.sd.hom((c.vertices[-1],), self.full)
                cert = self.functor.certificate(corner)
                cert_id = _cert_id(cert)
                last_edge = faces[0]
                for _ in range(ell - 2):
                    last_edge = self.oracle.face(last_edge, 0)
                if not self.oracle.is_equivalence(last_edge):
                    raise Unfillable("the last edge of the special horn is not an equivalence")
                fill = None
                if self.guided and self.functor.section is not None:
                    pref = self.functor.section(self.sigma)
                    if pref is not None:
                        fill = self.oracle.guided_fill(
                            horn, certificate=cert, preferred_face=pref
                        )
                        guided_used = fill is not None
                if fill is None:
                    fill = self.oracle.fill_special_outer_horn(horn, certificate=cert)
            else:
                fill = self.oracle.fill_inner_horn(horn)
        except DimensionTooLarge:
            raise
        except CorrLabError as err:
            raise OracleFillFailed(
                f"horn ({ell},{kk}) at {_chain_str(c)}: {err}"
            ) from err
        for j, f in faces.items():
            if not self.oracle.equal(self.oracle.face(fill, j), f):
                raise OracleFillFailed(
                    f"oracle changed face {j} of horn ({ell},{kk}) at {_chain_str(c)}"
                )
        self.assigned[c] = fill
        self.vals[c] = fill
        got = self.oracle.face(fill, kk)
        self.assigned[missing_chain] = got
        self.vals[missing_chain] = got
        self.trace.append(
            {
                "chain": _chain_str(c),
                "horn": (ell, kk),
                "kind": "special" if special else "inner",
                "guided": guided_used,
                "certificate": cert_id,
            }
        )

    # -- exhaustive face/degeneracy compatibility ----------------------------

    def _check_compat(self):
        table = sdv.enumerate_csd(self.sigma.n)
        for d in sorted(table):
            for c in table[d]:
                v = self.value(c)
                for i in range(d + 1):
                    if d >= 1:
                        fv = self.oracle.face(v, i)
                        if not self.oracle.equal(fv, self.value(sdv.face(c, i))):
                            raise CompatibilityViolated(
                                f"face {i} of {_chain_str(c)} disagrees with its value"
                            )
                    sv = self.oracle.degeneracy(v, i)
                    if not self.oracle.equal(sv, self.value(sdv.degeneracy(c, i))):
                        raise CompatibilityViolated(
                            f"degeneracy {i} of {_chain_str(c)} disagrees with its value"
                        )


class BarExtension:
    """A total assignment of target simplices to augmented-subdivision chains.

    ``value`` resolves any chain: assigned fills, functor values on subset
    chains, pullbacks to faces, and degeneracies.  ``trace`` records every
    horn fill of this run in order, and ``top()`` is the value on the plain
    vertex chain (0..n), i.e. the extended functor applied to the simplex.
    """

    def __init__(self, builder: _Builder):
        self.sigma = builder.sigma
        self.n = builder.sigma.n
        self.trace = builder.trace
        self._builder = builder

    def value(self, chain: AugChain):
        return self._builder.value(chain)

    __call__ = value

    def top(self):
        return self.value(AugChain(tuple(range(self.n + 1)), ()))


def extend_bar_G(
    sigma,
    F: CstFunctor,
    D: QCOracle,
    memo: dict = None,
    *,
    guided: bool = False,
    eps: float = EPS,
) -> BarExtension:
    """Extend F from the subdivision diagram of sigma over all augmented chains.

    Works dimensionwise up to n = 3 (the fills involved reach dimension
    n + 1, checked against the oracle's limit up front).  Results are
    memoised per functor and oracle by the structural hash of sigma, so
    faces shared between runs are extended once; pass the same memo dict to
    share across calls.
    """
    if memo is None:
        memo = {}
    key = ("g" if guided else "p", id(F), id(D), structural_hash(sigma))
    hit = memo.get(key)
    if hit is not None:
        return hit
    if sigma.n > 3:
        raise DimensionTooLarge(f"extension runs are capped at n = 3, got {sigma.n}")
    if D.max_fill_dim < sigma.n + 1:
        raise DimensionTooLarge(
            f"oracle fills up to dimension {D.max_fill_dim}, need {sigma.n + 1}"
        )
    ext = _Builder(sigma, F, D, memo, guided, eps).run()
    memo[key] = ext
    return ext


def bar_F(
    sigma,
    F: CstFunctor,
    D: QCOracle,
    memo: dict = None,
    *,
    guided: bool = False,
    eps: float = EPS,
):
    """The extended functor's value on sigma itself."""
    return extend_bar_G(sigma, F, D, memo, guided=guided, eps=eps).top()


# ---------------------------------------------------------------------------
# relative extension over a prism


@dataclass(frozen=True)
class CstHomotopy:
    """Two functors into the same target and an edgewise homotopy between them.

    ``eta(A)`` is the target edge F0(A) -> F1(A); its naturality is not
    assumed but verified cell by cell while the prism is filled.
    """

    f0: CstFunctor
    f1: CstFunctor
    eta: Callable


def _drop(t: tuple, i: int) -> tuple:
    return t[:i] + t[i + 1 :]


class RelExtension:
    """A simplicial map out of a family of prisms simplex x interval.

    Cells are addressed by a base simplex of the family together with a pair
    (alpha, w): a monotone vertex map into the base and an equally long
    monotone 0/1 word.  Constant words restrict to the two boundary maps,
    and ``value(sigma, w)`` with the identity alpha gives the homotopy's
    value on a simplex at a monotone time word.
    """

    def __init__(self, m: int, oracle: QCOracle, homotopy, boundary, family: dict):
        self.m = m
        self.oracle = oracle
        self.homotopy = homotopy
        self.boundary = boundary
        self.family = family
        self.cells = {}
        self._eta_cache = {}

    def value(self, sigma, w, alpha=None):
        key = structural_hash(sigma)
        if key not in self.family:
            raise BoundaryMismatch("simplex is not in the extended family")
        sigma = self.family[key]
        w = tuple(int(x) for x in w)
        if alpha is None:
            alpha = tuple(range(sigma.n + 1))
        else:
            alpha = tuple(int(x) for x in alpha)
        if len(alpha) != len(w):
            raise ShapeMismatch("alpha and w must have equal length")
        if any(x not in (0, 1) for x in w) or any(b < a for a, b in zip(w, w[1:])):
            raise ShapeMismatch(f"bad interval word {w}")
        return self._value(sigma, alpha, w)

    def _eta(self, algebra):
        key = structural_hash(algebra)
        hit = self._eta_cache.get(key)
        if hit is None:
            hit = self.homotopy.eta(algebra)
            self._eta_cache[key] = hit
        return hit

    def _value(self, sig, alpha, w):
        for i in range(len(w) - 1):
            if alpha[i] == alpha[i + 1] and w[i] == w[i + 1]:
                inner = self._value(sig, _drop(alpha, i), _drop(w, i))
                return self.oracle.degeneracy(inner, i)
        used = sorted(set(alpha))
        if len(used) < sig.n + 1:
            child = self.family[structural_hash(nerve.apply_map(sig, used))]
            pos = {v: i for i, v in enumerate(used)}
            return self._value(child, tuple(pos[a] for a in alpha), w)
        if w[0] == w[-1]:
            if w[0] >= len(self.boundary):
                raise BoundaryMismatch(f"no boundary map at interval vertex {w[0]}")
            try:
                return self.boundary[w[0]][structural_hash(sig)]
            except KeyError:
                raise BoundaryMismatch(
                    "boundary data does not cover a face of the family"
                ) from None
        hit = self.cells.get((structural_hash(sig), alpha, w))
        if hit is None:
            if sig.n == 0 and alpha == (0, 0) and w == (0, 1):
                return self._eta(sig.algebras[0])
            raise CompatibilityViolated(
                f"prism cell {alpha}/{w} was needed before it was built"
            )
        return hit


def extend_relative(
    h,
    boundary,
    family,
    D: QCOracle,
    *,
    m: int = 1,
    eps: float = EPS,
) -> RelExtension:
    """Extend functor-level homotopy data over the prisms of a simplex family.

    ``m = 0``: ``h`` is a CstFunctor, ``boundary`` must be None, and the
    result is just the bar extension packaged per simplex.  ``m = 1``:
    ``h`` is a CstHomotopy, ``boundary`` is a pair of dicts mapping the
    structural hash of each family member to its value under the two ends
    (computed via bar_F when None), and the prisms are filled shuffle by
    shuffle: inner horns produce the diagonals, and the final cell of each
    prism is assembled from its full boundary, which is exactly where
    non-natural data fails.  Simplices are capped at dimension 2.
    """
    if m not in (0, 1):
        raise DimensionTooLarge(f"relative extension is capped at m = 1, got {m}")
    closed = {}
    order = []

    def add(s):
        key = structural_hash(s)
        if key in closed:
            return
        closed[key] = s
        if s.n >= 1:
            for i in range(s.n + 1):
                add(nerve.face(s, i))
        order.append(s)

    for s in family:
        if s.n > 2:
            raise DimensionTooLarge("relative extension is capped at simplex dimension 2")
        add(s)
    order.sort(key=lambda s: s.n)

    if m == 0:
        if boundary is not None:
            raise BoundaryMismatch("m = 0 takes no boundary data")
        memo = {}
        atlas = {structural_hash(s): bar_F(s, h, D, memo, eps=eps) for s in order}
        rel = RelExtension(0, D, h, (atlas,), closed)
        return rel

    if not isinstance(h, CstHomotopy):
        raise ShapeMismatch("m = 1 needs a CstHomotopy")
    if boundary is None:
        memo = {}
        boundary = (
            {structural_hash(s): bar_F(s, h.f0, D, memo, eps=eps) for s in order},
            {structural_hash(s): bar_F(s, h.f1, D, memo, eps=eps) for s in order},
        )
    b0, b1 = boundary
    for s in order:
        key = structural_hash(s)
        if key not in b0 or key not in b1:
            raise BoundaryMismatch("boundary data does not cover the family")

    rel = RelExtension(1, D, h, (b0, b1), closed)

    # eta must connect the two boundary values on every object
    for s in order:
        if s.n != 0:
            continue
        e = rel._eta(s.algebras[0])
        key = structural_hash(s)
        if not (
            D.equal(D.face(e, 1), b0[key]) and D.equal(D.face(e, 0), b1[key])
        ):
            raise BoundaryMismatch("eta does not connect the two boundary values")

    for sig in order:
        q = sig.n
        if q == 0:
            continue
        for t in range(q, 0, -1):
            alpha_t = tuple(list(range(t + 1)) + list(range(t, q + 1)))
            w_t = (0,) * (t + 1) + (1,) * (q + 1 - t)
            faces = {
                j: rel._value(sig, _drop(alpha_t, j), _drop(w_t, j))
                for j in range(q + 2)
                if j != t
            }
            try:
                cell = D.fill_inner_horn(HornSpec(q + 1, t, faces))
            except CorrLabError as err:
                raise OracleFillFailed(f"prism horn ({q + 1},{t}): {err}") from err
            for j, f in faces.items():
                if not D.equal(D.face(cell, j), f):
                    raise OracleFillFailed(f"oracle changed face {j} of a prism horn")
            key = structural_hash(sig)
            rel.cells[(key, alpha_t, w_t)] = cell
            diag_w = (0,) * t + (1,) * (q + 1 - t)
            rel.cells[(key, tuple(range(q + 1)), diag_w)] = D.face(cell, t)
        alpha_0 = tuple([0] + list(range(q + 1)))
        w_0 = (0,) + (1,) * (q + 1)
        faces = {
            j: rel._value(sig, _drop(alpha_0, j), _drop(w_0, j)) for j in range(q + 2)
        }
        try:
            cell = D.fill_boundary(faces)
        except CorrLabError as err:
            raise BoundaryMismatch(
                f"homotopy data is not natural on a {q}-simplex: {err}"
            ) from err
        rel.cells[(structural_hash(sig), alpha_0, w_0)] = cell

    # exhaustive face check over every built prism cell
    for (key, alpha, w), v in list(rel.cells.items()):
        sig = closed[key]
        for i in range(len(w)):
            fv = D.face(v, i)
            if not D.equal(fv, rel._value(sig, _drop(alpha, i), _drop(w, i))):
                raise CompatibilityViolated(
                    f"face {i} of prism cell {alpha}/{w} disagrees"
                )
    return rel
