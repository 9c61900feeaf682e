"""The correspondence bicategory over *-homomorphisms.

gamma_of_hom sends phi: A -> B to the correspondence phi(1)B, with left
action the compression of phi by isometries onto the ranges of phi(1).
Composition of homs and tensor product of their correspondences agree up to
the canonical intertwiner produced by gamma_multiplicativity.

Every correspondence factors through its linking algebra K(E (+) B): the
left action lands in the E corner, B sits in the complementary corner, and
u_of_corr returns the factorization data together with the exact
intertwiner (Gamma j_E) (x) X -> E, where X inverts the B corner.

Equivalences (full correspondences whose left action is a *-isomorphism)
get explicit inverses via conjugate modules; the unitaries carrying each
source block onto its matched compact block are extracted from the images
of matrix units, which also powers find_corr_iso.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgElement,
    CornerPresentation,
    FdCstarAlgebra,
    StarHom,
    compose_homs,
    corner_algebra,
    make_star_hom,
)
from .errors import EndpointMismatch, InvalidAlgebra, NotAnEquivalence
from .linalg import EPS, fix_phase, frob, orthonormal_range
from .modules import (
    CorrIso,
    Correspondence,
    HilbertModule,
    ModElement,
    TensorProduct,
    identity_corr,
    is_full_corr,
    iso_from_action,
    make_module,
    tensor_corrs,
)

__all__ = [
    "gamma_of_hom",
    "gamma_isometries",
    "gamma_multiplicativity",
    "corner_embedding",
    "left_action_hom",
    "CornerFactorization",
    "u_of_corr",
    "EquivalenceWitness",
    "is_equivalence",
    "equivalence_inverse",
    "find_corr_iso",
]


def gamma_isometries(phi: StarHom, *, eps: float = EPS):
    """Per-dst-block isometries onto the ranges of phi(1)."""
    p = phi.apply(phi.src.identity())
    return [orthonormal_range(p.mats[j], eps) for j in range(phi.dst.nblocks)]


def gamma_of_hom(phi: StarHom, *, eps: float = EPS) -> Correspondence:
    """The correspondence phi(1)B of a *-homomorphism phi: A -> B.

    Module multiplicity at block j is rank(phi(1)_j); the left action is
    a -> V_j^* phi(a)_j V_j on the isometries V_j spanning those ranges.
    """
    vs = gamma_isometries(phi, eps=eps)
    mult = [v.shape[1] for v in vs]
    if all(m == 0 for m in mult):
        raise InvalidAlgebra("the zero homomorphism has no correspondence")
    module = make_module(phi.dst, mult)
    cols = []
    for p in range(phi.src.dim):
        img = phi.dst.from_vec(phi.matrix[:, p])
        y = module.compacts.zero()
        for t, j in enumerate(module.kept):
            y.mats[t][:, :] = vs[j].conj().T @ img.mats[j] @ vs[j]
        cols.append(y.to_vec())
    lam = make_star_hom(phi.src, module.compacts, np.array(cols).T, eps=eps, validate=False)
    return Correspondence(phi.src, module, lam)


def left_action_hom(corr: Correspondence) -> StarHom:
    return corr.lam


def corner_embedding(p: AlgElement, b: FdCstarAlgebra, *, eps: float = EPS) -> CornerPresentation:
    return corner_algebra(p, b, eps=eps)


def gamma_multiplicativity(
    psi: StarHom, phi: StarHom, tp: TensorProduct, *, comp=None, target=None, eps: float = EPS
) -> CorrIso:
    """Canonical intertwiner (Gamma phi) (x) (Gamma psi) -> Gamma(psi . phi).

    On representatives it is b (x) c -> psi(b) c, written in the range
    coordinates of the three correspondences.  ``comp`` may supply the
    composite hom (and ``target`` its correspondence) so the result lands on
    an already materialized object instead of a recomputation.
    """
    if phi.dst != psi.src:
        raise EndpointMismatch("homs are not composable")
    if comp is None:
        comp = compose_homs(psi, phi, eps=eps)
    elif comp.src != phi.src or comp.dst != psi.dst:
        raise EndpointMismatch("comp does not have the composite endpoints")
    if target is None:
        target = gamma_of_hom(comp, eps=eps)
    v_phi = gamma_isometries(phi, eps=eps)
    v_psi = gamma_isometries(psi, eps=eps)
    v_comp = gamma_isometries(comp, eps=eps)
    c = psi.dst

    def action(j, a, w: ModElement) -> ModElement:
        b = phi.dst.zero()
        b.mats[j][:, 0] = v_phi[j][:, a]
        img = psi.apply(b)
        out = target.module.zero()
        for k in range(c.nblocks):
            if target.module.mult[k] == 0:
                continue
            out.mats[k][:, :] = (
                v_comp[k].conj().T @ img.mats[k] @ v_psi[k] @ w.mats[k]
            )
        return out

    return iso_from_action(tp, target, action, eps=eps)


@dataclass(frozen=True)
class CornerFactorization:
    """E presented as (Gamma j_E) (x)_L X over the linking algebra L.

    ``linking`` is K(E (+) B); ``j_hom`` maps the source into the E corner,
    ``i_hom`` embeds B into the complementary corner (a full corner
    embedding), ``x_corr`` is the tautological correspondence L -> B, and
    ``iso: tp.corr -> E`` is the exact factorization intertwiner.
    """

    linking: FdCstarAlgebra
    j_hom: StarHom
    i_hom: StarHom
    gamma_j: Correspondence
    x_corr: Correspondence
    tp: TensorProduct
    iso: CorrIso


def u_of_corr(corr: Correspondence, *, eps: float = EPS) -> CornerFactorization:
    a, b = corr.src, corr.dst
    e_mod = corr.module
    sum_mod = make_module(b, [m + n for m, n in zip(e_mod.mult, b.blocks)])
    linking = sum_mod.compacts

    j_cols = []
    for p in range(a.dim):
        lam_img = e_mod.compacts.from_vec(corr.lam.matrix[:, p])
        y = linking.zero()
        for t, k in enumerate(sum_mod.kept):
            pos = e_mod.compact_pos(k)
            if pos is not None:
                m = e_mod.mult[k]
                y.mats[t][:m, :m] = lam_img.mats[pos]
        j_cols.append(y.to_vec())
    j_hom = make_star_hom(a, linking, np.array(j_cols).T, eps=eps, validate=False)

    i_cols = []
    for p, k, r, c2 in b.basis_triples():
        y = linking.zero()
        t = sum_mod.compact_pos(k)
        m = e_mod.mult[k]
        y.mats[t][m + r, m + c2] = 1.0
        i_cols.append(y.to_vec())
    i_hom = make_star_hom(b, linking, np.array(i_cols).T, eps=eps, validate=False)

    gamma_j = gamma_of_hom(j_hom, eps=eps)
    x_corr = Correspondence(linking, sum_mod, _identity_action(sum_mod))
    tp = tensor_corrs(gamma_j, x_corr, eps=eps)

    def action(k, a2, w: ModElement) -> ModElement:
        out = e_mod.zero()
        out.mats[k][a2, :] = w.mats[k][0, :]
        return out

    iso = iso_from_action(tp, corr, action, eps=eps)
    return CornerFactorization(linking, j_hom, i_hom, gamma_j, x_corr, tp, iso)


def _identity_action(module: HilbertModule) -> StarHom:
    kg = module.compacts
    eye = np.eye(kg.dim, dtype=complex)
    eye.setflags(write=False)
    return StarHom(kg, kg, eye, np.eye(kg.nblocks, dtype=np.int64), True)


@dataclass(frozen=True)
class EquivalenceWitness:
    """Inverse data of an equivalence correspondence E: A -> B.

    ``block_map[i]`` is the B block matched to A block i by the left action,
    ``unitaries[i]`` conjugates A block i onto the corresponding compact
    block.  The counits contract E (x) inverse -> id_A and
    inverse (x) E -> id_B.
    """

    corr: Correspondence
    inverse: Correspondence
    block_map: tuple
    unitaries: tuple
    tp_left: TensorProduct
    counit_left: CorrIso
    tp_right: TensorProduct
    counit_right: CorrIso


def _ad_unitary(lam: StarHom, i: int, k_pos: int, *, eps: float) -> np.ndarray:
    """Unitary u with lam(x)|_{block k} = u x_i u^* for a multiplicity-one
    block pair; built from the images of the matrix units of row one."""
    n = lam.src.blocks[i]
    p11 = lam.apply(lam.src.matrix_unit(i, 0, 0)).mats[k_pos]
    v = orthonormal_range(p11, eps)
    if v.shape[1] != 1:
        raise NotAnEquivalence(f"left action is not multiplicity one at block {i}")
    v1 = fix_phase(v[:, 0], eps)
    cols = [lam.apply(lam.src.matrix_unit(i, b2, 0)).mats[k_pos] @ v1 for b2 in range(n)]
    return np.column_stack(cols)


def equivalence_inverse(corr: Correspondence, *, eps: float = EPS) -> EquivalenceWitness:
    """Explicit inverse of an equivalence, via the conjugate module.

    Raises NotAnEquivalence unless the correspondence is full and its left
    action is a *-isomorphism onto the compacts.
    """
    a, b = corr.src, corr.dst
    if not is_full_corr(corr, eps=eps):
        raise NotAnEquivalence("correspondence is not full")
    lam = corr.lam
    ke = corr.module.compacts
    mm = lam.mult_matrix
    perm_like = (
        a.nblocks == ke.nblocks
        and ((mm == 0) | (mm == 1)).all()
        and (mm.sum(axis=0) == 1).all()
        and (mm.sum(axis=1) == 1).all()
    )
    if not perm_like:
        raise NotAnEquivalence("left action multiplicities are not a permutation")
    block_map = []
    for i in range(a.nblocks):
        k_pos = int(np.argmax(mm[i]))
        k = corr.module.kept[k_pos]
        if a.blocks[i] != corr.module.mult[k]:
            raise NotAnEquivalence(
                f"block {i} of the source has size {a.blocks[i]},"
                f" matched compact block has size {corr.module.mult[k]}"
            )
        block_map.append(k)
    us = []
    for i in range(a.nblocks):
        k = block_map[i]
        us.append(_ad_unitary(lam, i, corr.module.compact_pos(k), eps=eps))

    inv_mod = make_module(a, [b.blocks[block_map[i]] for i in range(a.nblocks)])
    inv_cols = []
    for p, k, r, c2 in b.basis_triples():
        y = inv_mod.compacts.zero()
        for i in range(a.nblocks):
            if block_map[i] == k:
                y.mats[inv_mod.compact_pos(i)][r, c2] = 1.0
        inv_cols.append(y.to_vec())
    inv_lam = make_star_hom(b, inv_mod.compacts, np.array(inv_cols).T, eps=eps, validate=False)
    if not inv_lam.unital:
        raise NotAnEquivalence("correspondence is not full")
    inverse = Correspondence(b, inv_mod, inv_lam)

    tp_left = tensor_corrs(corr, inverse, eps=eps)
    id_a = identity_corr(a)

    def act_left(k, r, w: ModElement) -> ModElement:
        out = id_a.module.zero()
        for i in range(a.nblocks):
            if block_map[i] == k:
                out.mats[i][:, :] = np.outer(us[i].conj().T[:, r], w.mats[i][0, :])
        return out

    counit_left = iso_from_action(tp_left, id_a, act_left, eps=eps)

    tp_right = tensor_corrs(inverse, corr, eps=eps)
    id_b = identity_corr(b)

    def act_right(i, r, w: ModElement) -> ModElement:
        out = id_b.module.zero()
        k = block_map[i]
        out.mats[k][r, :] = us[i][:, 0].conj() @ w.mats[k]
        return out

    counit_right = iso_from_action(tp_right, id_b, act_right, eps=eps)
    return EquivalenceWitness(
        corr, inverse, tuple(block_map), tuple(us), tp_left, counit_left, tp_right, counit_right
    )


def is_equivalence(corr: Correspondence, *, eps: float = EPS) -> bool:
    try:
        equivalence_inverse(corr, eps=eps)
        return True
    except NotAnEquivalence:
        return False


def find_corr_iso(c1: Correspondence, c2: Correspondence, *, eps: float = EPS):
    """A unitary intertwiner c1 -> c2, or None if none exists.

    Two correspondences with equal multiplicities are isomorphic exactly
    when their left actions have the same block multiplicities; the
    intertwiner is assembled from the normal forms of both actions.
    """
    from .algebra import hom_normal_form

    if c1.src != c2.src or c1.dst != c2.dst or c1.module.mult != c2.module.mult:
        return None
    if not np.array_equal(c1.lam.mult_matrix, c2.lam.mult_matrix):
        return None
    w1 = hom_normal_form(c1.lam, eps=eps)
    w2 = hom_normal_form(c2.lam, eps=eps)
    blocks = []
    for k in range(c1.dst.nblocks):
        pos = c1.module.compact_pos(k)
        if pos is None:
            blocks.append(np.zeros((0, 0), dtype=complex))
        else:
            blocks.append(w2[pos] @ w1[pos].conj().T)
    try:
        return CorrIso(c1, c2, blocks, eps=eps)
    except Exception:
        return None
