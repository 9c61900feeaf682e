"""Seeded property sweeps over the whole construction.

Each suite draws its own generator from the seed, runs a fixed number of
randomized cases, and reports one record per case: name, pass/fail, the
worst residual observed, and wall time.  The sweeps are what the
``selftest`` command runs and what the acceptance tests assert on;
tolerances come in through ``eps`` so a deliberately tight run can show
where double precision gives out.

Cross-checks are computed from scratch here rather than read back from the
constructors: unitarity and intertwining residuals are recomputed from the
raw blocks, and K-theory matrices of bimodules are obtained by ranking the
images of the source units, independently of the extension engine.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .algebra import EPS, compose_homs, is_full_hom
from .bicategory import (
    equivalence_inverse,
    gamma_multiplicativity,
    gamma_of_hom,
    u_of_corr,
)
from .errors import ValidationError
from .extension import (
    CstHomotopy,
    K0Oracle,
    NCorrOracle,
    bar_F,
    extend_bar_G,
    extend_relative,
    gamma_functor,
    k0_functor,
    k0_matrix,
)
from .extension import K0Simplex
from .generators import (
    random_algebra,
    random_chain,
    random_correspondence,
    random_equivalence,
    random_simplex,
)
from .linalg import frob, int_inverse
from .modules import corr_close, identity_corr, iso_distance, tensor_corrs
from .nerve import (
    HornSpec,
    face as simplex_face,
    fill_inner_horn,
    gamma_simplex,
    make_simplex,
    pentagon_residual,
    simplex_close,
    structural_hash,
    validate_simplex,
)
from .subdivision import (
    degeneracy as chain_degeneracy,
    enumerate_csd,
    face as chain_face,
    subdivision_functor,
)

__all__ = [
    "CaseReport",
    "SuiteReport",
    "SUITES",
    "run_suite",
    "run_all",
    "report_json",
    "k0_of_corr",
    "random_unimodular",
    "conjugated_k0",
]


@dataclass(frozen=True)
class CaseReport:
    case: str
    ok: bool
    residual: float
    seconds: float


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    ok: bool
    worst: float
    seconds: float
    cases: tuple

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "ok": self.ok,
            "worst": self.worst,
            "seconds": self.seconds,
            "cases": [
                {"case": c.case, "ok": c.ok, "residual": c.residual, "time": c.seconds}
                for c in self.cases
            ],
        }


def _finish(name: str, cases: list, t0: float) -> SuiteReport:
    return SuiteReport(
        name,
        bool(cases) and all(c.ok for c in cases),
        max((c.residual for c in cases), default=0.0),
        time.perf_counter() - t0,
        tuple(cases),
    )


# ---------------------------------------------------------------------------
# independent recomputations


def _iso_residuals(u) -> tuple:
    """(U*U - 1, U U* - 1, intertwining) worst Frobenius norms.

    Recomputed from the raw blocks and left-action matrices; the same
    numbers the constructor bounds, but reported instead of thresholded.
    """
    r1 = r2 = r3 = 0.0
    for blk in u.blocks:
        m = blk.shape[0]
        if m:
            r1 = max(r1, frob(blk.conj().T @ blk - np.eye(m)))
            r2 = max(r2, frob(blk @ blk.conj().T - np.eye(m)))
    a_dim = u.src.src.dim
    cs, cd = u.src.module.compacts, u.dst.module.compacts
    for k in u.src.module.kept:
        blk = u.blocks[k]
        ps = u.src.module.compact_pos(k)
        m_s, o_s = cs.blocks[ps], cs.offset(ps)
        s3 = u.src.lam.matrix[o_s : o_s + m_s * m_s, :].reshape(m_s, m_s, a_dim)
        pd = u.dst.module.compact_pos(k)
        if pd is None:
            d3 = np.zeros((blk.shape[0], m_s, a_dim), dtype=complex)
        else:
            m_d, o_d = cd.blocks[pd], cd.offset(pd)
            d3 = u.dst.lam.matrix[o_d : o_d + m_d * m_d, :].reshape(m_d, m_d, a_dim)
        lhs = np.tensordot(blk, s3, axes=(1, 0))
        rhs = np.tensordot(d3, blk, axes=(1, 0)).transpose(0, 2, 1)
        if lhs.size:
            r3 = max(r3, float(np.sqrt((np.abs(lhs - rhs) ** 2).sum(axis=(0, 1))).max()))
    return r1, r2, r3


def k0_of_corr(corr) -> np.ndarray:
    """K-theory matrix of a correspondence, dst blocks by src blocks.

    Entry (k, i) is the rank of the left action of the i-th source unit on
    the k-th module block, read off one unit at a time; no factorization
    machinery is involved.
    """
    a = corr.src
    out = np.zeros((corr.dst.nblocks, a.nblocks), dtype=np.int64)
    lam = corr.lam
    for i in range(a.nblocks):
        p = np.zeros(a.dim, dtype=complex)
        p[a.offset(i)] = 1.0
        img = lam.matrix @ p
        compacts = lam.dst
        pos = 0
        for kk, s in enumerate(compacts.blocks):
            blk = img[pos : pos + s * s].reshape(s, s)
            pos += s * s
            out[corr.module.kept[kk], i] = np.linalg.matrix_rank(blk, tol=1e-7)
    return out


def random_unimodular(n: int, rng) -> np.ndarray:
    """Integer matrix with determinant +-1, by random row operations."""
    m = np.eye(n, dtype=np.int64)
    for _ in range(3 * n):
        i, j = rng.integers(0, n, 2)
        if i != j:
            m[i] += int(rng.integers(-2, 3)) * m[j]
    return m


def conjugated_k0(rng):
    """A second K-theory functor, conjugated objectwise by unimodular P(A).

    Returns (functor, P); the functor sends a hom f to P(dst) K(f) P(src)^-1,
    so eta(A) = P(A) is a natural edge from the plain K-theory functor.
    """
    ps = {}

    def P(a) -> np.ndarray:
        key = structural_hash(a)
        if key not in ps:
            ps[key] = random_unimodular(a.nblocks, rng)
        return ps[key]

    def vertex(a):
        return K0Simplex((a.nblocks,), {}, validate=False)

    def chain(homs, composites=None):
        homs = list(homs)
        ranks = (homs[0].src.nblocks,) + tuple(h.dst.nblocks for h in homs)
        steps = [P(h.dst) @ k0_matrix(h) @ int_inverse(P(h.src)) for h in homs]
        mats = {}
        for i in range(len(ranks)):
            acc = np.eye(ranks[i], dtype=np.int64)
            for j in range(i + 1, len(ranks)):
                acc = steps[j - 1] @ acc
                mats[(i, j)] = acc
        return K0Simplex(ranks, mats)

    def certificate(phi):
        return int_inverse(P(phi.dst) @ k0_matrix(phi) @ int_inverse(P(phi.src)))

    from .extension import CstFunctor

    return CstFunctor("K0conj", vertex, chain, certificate), P


def _small_pair(rng):
    """A composable pair whose three algebras fit in 3 blocks of size <= 4."""
    while True:
        phi, psi = random_chain(rng, 2, max_blocks=3, max_size=2, max_mult=1)
        algs = (phi.src, phi.dst, psi.dst)
        if all(a.nblocks <= 3 and max(a.blocks) <= 4 for a in algs):
            return phi, psi


# ---------------------------------------------------------------------------
# the suites


def suite_gamma_mult(*, seed: int = 42, eps: float = EPS, trials: int = 200) -> SuiteReport:
    """Multiplicativity intertwiners exist and validate on random pairs."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        phi, psi = _small_pair(rng)
        try:
            tp = tensor_corrs(gamma_of_hom(phi, eps=eps), gamma_of_hom(psi, eps=eps), eps=eps)
            u = gamma_multiplicativity(psi, phi, tp, eps=eps)
            resid = max(_iso_residuals(u))
            ok = resid <= eps
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"pair-{t:03d}", ok, resid, time.perf_counter() - tc))
    return _finish("gamma-mult", cases, t0)


def suite_nerve_coherence(*, seed: int = 42, eps: float = EPS, trials: int = 100) -> SuiteReport:
    """3-chain simplices validate and satisfy every pentagon instance."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        chain = random_chain(rng, 3, max_blocks=2, max_size=2, max_mult=1)
        try:
            s = gamma_simplex(chain, eps=eps, validate=False)
            validate_simplex(s, eps=eps)
            resid = max(
                pentagon_residual(s, i, j, k, l)
                for i in range(4)
                for j in range(i, 4)
                for k in range(j, 4)
                for l in range(k, 4)
            )
            ok = resid <= eps
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"chain-{t:03d}", ok, resid, time.perf_counter() - tc))
    return _finish("nerve-coherence", cases, t0)


def suite_subdivision(*, seed: int = 42, eps: float = EPS, trials: int = 50) -> SuiteReport:
    """Connecting homs compose on the nose over every nested subset triple."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        n = (t % 3) + 1
        s = random_simplex(rng, n, twist=bool(t % 2), max_blocks=2, max_size=2, max_mult=1)
        try:
            sd = subdivision_functor(s, eps=eps, check=False)
            resid = 0.0
            for a in sd.subsets:
                for b in sd.subsets:
                    if not set(a) <= set(b):
                        continue
                    for c in sd.subsets:
                        if not set(b) <= set(c):
                            continue
                        diff = sd.hom(b, c).matrix @ sd.hom(a, b).matrix - sd.hom(a, c).matrix
                        resid = max(resid, frob(diff))
            ok = resid <= eps
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"simplex-{t:02d}-n{n}", ok, resid, time.perf_counter() - tc))
    return _finish("subdivision-functor", cases, t0)


def suite_corner_unitary(*, seed: int = 42, eps: float = EPS, trials: int = 100) -> SuiteReport:
    """Every correspondence factors through its linking algebra corner."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        a = random_algebra(rng, max_blocks=2, max_size=2)
        b = random_algebra(rng, max_blocks=2, max_size=2)
        try:
            corr = random_correspondence(a, b, rng)
            fact = u_of_corr(corr, eps=eps)
            resid = max(_iso_residuals(fact.iso))
            ok = (
                resid <= eps
                and corr_close(fact.iso.dst, corr, eps)
                and is_full_hom(fact.i_hom, eps=eps)
            )
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"corr-{t:03d}", ok, resid, time.perf_counter() - tc))
    return _finish("corner-unitary", cases, t0)


def suite_morita(*, seed: int = 42, eps: float = EPS, trials: int = 50) -> SuiteReport:
    """Equivalence inverses contract to the identity on both sides."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        b = random_algebra(rng, max_blocks=2, max_size=2)
        try:
            e = random_equivalence(b, rng)
            w = equivalence_inverse(e, eps=eps)
            resid = max(max(_iso_residuals(w.counit_left)), max(_iso_residuals(w.counit_right)))
            ok = (
                resid <= eps
                and corr_close(w.counit_left.dst, identity_corr(e.src), eps)
                and corr_close(w.counit_right.dst, identity_corr(e.dst), eps)
            )
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"equiv-{t:02d}", ok, resid, time.perf_counter() - tc))
    return _finish("morita-inverse", cases, t0)


def suite_horn_uniqueness(*, seed: int = 42, eps: float = EPS, trials: int = 50) -> SuiteReport:
    """Refilling a deleted inner face of a 3-simplex recovers its unitary."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        s = random_simplex(rng, 3, twist=bool(t % 2), max_blocks=2, max_size=2, max_mult=1)
        resid, ok = 0.0, True
        try:
            for k in (1, 2):
                horn = HornSpec(3, k, {j: simplex_face(s, j) for j in range(4) if j != k})
                refill = fill_inner_horn(horn, eps=eps)
                missing = tuple(x for x in range(4) if x != k)
                resid = max(resid, iso_distance(refill.cells[missing], s.cells[missing]))
                ok = ok and simplex_close(refill, s, eps)
            ok = ok and resid <= eps
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"simplex-{t:02d}", ok, resid, time.perf_counter() - tc))
    return _finish("horn-uniqueness", cases, t0)


def suite_k0_extension(
    *, seed: int = 42, eps: float = EPS, trials: int = 50, trials2: int = 20
) -> SuiteReport:
    """The extension over K-theory returns the bimodule's integer matrix.

    Checked edge by edge against k0_of_corr and, on the leading edge,
    against the product K(i)^-1 K(f) of the corner factorization.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    F = k0_functor()
    D = K0Oracle()
    memo: dict = {}
    for t in range(trials + trials2):
        tc = time.perf_counter()
        n = 1 if t < trials else 2
        s = random_simplex(rng, n, twist=bool(t % 2), max_blocks=2, max_size=2, max_mult=1)
        try:
            bar = bar_F(s, F, D, memo, eps=eps)
            worst = 0
            for i in range(n + 1):
                for j in range(i + 1, n + 1):
                    want = k0_of_corr(s.edges[(i, j)])
                    worst = max(worst, int(np.abs(bar.mats[(i, j)] - want).max()))
            fact = u_of_corr(s.edges[(0, 1)], eps=eps)
            direct = int_inverse(k0_matrix(fact.i_hom)) @ k0_matrix(fact.j_hom)
            worst = max(worst, int(np.abs(bar.mats[(0, 1)] - direct).max()))
            resid, ok = float(worst), worst == 0
        except (ValidationError, ValueError):
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"simplex-{t:02d}-n{n}", ok, resid, time.perf_counter() - tc))
    return _finish("k0-extension", cases, t0)


def _diagram(rng):
    """Four objects in a row, the three steps, and all their composites."""
    f01, f12, f23 = random_chain(rng, 3, max_blocks=2, max_size=2, max_mult=1)
    f02 = compose_homs(f12, f01)
    f13 = compose_homs(f23, f12)
    f03 = compose_homs(f23, f02)
    return [f01, f12, f23, f02, f13, f03]


def suite_section(*, seed: int = 42, eps: float = EPS, trials: int = 3) -> SuiteReport:
    """Guided extension is the identity on image simplices of the nerve map.

    Every vertex, edge and triangle the diagram produces comes back with the
    same structural hash, i.e. bit-identical.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        arrows = _diagram(rng)
        F = gamma_functor(arrows, eps=eps)
        D = NCorrOracle(eps=eps)
        memo: dict = {}
        sims = []
        seen = set()
        for h in arrows:
            for a in (h.src, h.dst):
                key = structural_hash(a)
                if key not in seen:
                    seen.add(key)
                    sims.append(make_simplex([a], {}, {}, eps=eps))
        sims += [gamma_simplex([h], eps=eps) for h in arrows]
        sims += [
            gamma_simplex([g, h], eps=eps)
            for g in arrows
            for h in arrows
            if h.src == g.dst
        ]
        for p, sig in enumerate(sims):
            tc = time.perf_counter()
            try:
                bar = bar_F(sig, F, D, memo, guided=True, eps=eps)
                exact = structural_hash(bar) == structural_hash(sig)
                resid, ok = (0.0, True) if exact else (1.0, False)
            except ValidationError:
                resid, ok = float("inf"), False
            cases.append(
                CaseReport(f"diagram-{t}-sim-{p:02d}-n{sig.n}", ok, resid, time.perf_counter() - tc)
            )
    return _finish("section-exact", cases, t0)


def _simplex_closure(sig):
    seen, out = set(), []

    def add(s):
        key = structural_hash(s)
        if key in seen:
            return
        seen.add(key)
        if s.n >= 1:
            for i in range(s.n + 1):
                add(simplex_face(s, i))
        out.append(s)

    add(sig)
    return out


def suite_relative(*, seed: int = 42, eps: float = EPS, trials: int = 10) -> SuiteReport:
    """Prism extensions restrict to the two bar extensions on the boundary."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    for t in range(trials):
        tc = time.perf_counter()
        n = (t % 2) + 1
        sig = random_simplex(rng, n, twist=bool(t % 2), max_blocks=2, max_size=2, max_mult=1)
        try:
            F0 = k0_functor()
            F1, P = conjugated_k0(rng)

            def eta(a, P=P):
                return K0Simplex((a.nblocks, a.nblocks), {(0, 1): P(a)})

            D = K0Oracle()
            rel = extend_relative(CstHomotopy(F0, F1, eta), None, [sig], D, eps=eps)
            memo: dict = {}
            ok = True
            for s in _simplex_closure(sig):
                ok = ok and rel.value(s, (0,) * (s.n + 1)) == bar_F(s, F0, D, memo, eps=eps)
                ok = ok and rel.value(s, (1,) * (s.n + 1)) == bar_F(s, F1, D, memo, eps=eps)
            resid = 0.0 if ok else 1.0
        except ValidationError:
            resid, ok = float("inf"), False
        cases.append(CaseReport(f"prism-{t:02d}-n{n}", ok, resid, time.perf_counter() - tc))
    return _finish("relative-prism", cases, t0)


def suite_combinatorics(*, seed: int = 42, eps: float = EPS, trials: int = 4) -> SuiteReport:
    """Simplicial identities on augmented chains, and the fixed fill order.

    The identity sweep covers every nondegenerate chain of dimension <= 4
    together with all their one-step degeneracies; the trace case pins the
    2-simplex run to three inner tetrahedron horns and one special step.
    """
    t0 = time.perf_counter()
    cases = []
    for n in range(min(trials, 4)):
        tc = time.perf_counter()
        by_dim = enumerate_csd(n)
        pool = [c for d in sorted(by_dim) if d <= 4 for c in by_dim[d]]
        pool += [
            chain_degeneracy(c, i) for c in pool if c.dim <= 3 for i in range(c.dim + 1)
        ]
        bad = 0
        for c in pool:
            l = c.dim
            if l >= 2:
                for j in range(l + 1):
                    for i in range(j):
                        if chain_face(chain_face(c, j), i) != chain_face(chain_face(c, i), j - 1):
                            bad += 1
            for j in range(l + 1):
                for i in range(j + 1):
                    if chain_degeneracy(chain_degeneracy(c, j), i) != chain_degeneracy(
                        chain_degeneracy(c, i), j + 1
                    ):
                        bad += 1
            for j in range(l + 1):
                sj = chain_degeneracy(c, j)
                for i in range(l + 2):
                    got = chain_face(sj, i)
                    if i < j:
                        want = chain_degeneracy(chain_face(c, i), j - 1)
                    elif i in (j, j + 1):
                        want = c
                    else:
                        want = chain_degeneracy(chain_face(c, i - 1), j)
                    if got != want:
                        bad += 1
        cases.append(
            CaseReport(f"identities-n{n}", bad == 0, float(bad), time.perf_counter() - tc)
        )
    tc = time.perf_counter()
    rng = np.random.default_rng(seed)
    sig = random_simplex(rng, 2, max_blocks=2, max_size=2, max_mult=1)
    ext = extend_bar_G(sig, k0_functor(), K0Oracle(), {})
    shape = [(tuple(e["horn"]), e["kind"]) for e in ext.trace]
    want = [((3, 2), "inner")] * 3 + [((3, 3), "special")]
    cases.append(
        CaseReport("n2-fill-order", shape == want, 0.0 if shape == want else 1.0,
                   time.perf_counter() - tc)
    )
    return _finish("csd-combinatorics", cases, t0)


SUITES = {
    "gamma-mult": suite_gamma_mult,
    "nerve-coherence": suite_nerve_coherence,
    "subdivision-functor": suite_subdivision,
    "corner-unitary": suite_corner_unitary,
    "morita-inverse": suite_morita,
    "horn-uniqueness": suite_horn_uniqueness,
    "k0-extension": suite_k0_extension,
    "section-exact": suite_section,
    "relative-prism": suite_relative,
    "csd-combinatorics": suite_combinatorics,
}


def run_suite(name: str, *, seed: int = 42, eps: float = EPS, **kw) -> SuiteReport:
    return SUITES[name](seed=seed, eps=eps, **kw)


def run_all(*, seed: int = 42, eps: float = EPS, names=None) -> list:
    names = list(SUITES) if names is None else list(names)
    return [run_suite(name, seed=seed, eps=eps) for name in names]


def report_json(reports, *, seed: int, eps: float) -> dict:
    return {
        "seed": seed,
        "eps": eps,
        "ok": all(r.ok for r in reports),
        "suites": [r.to_json() for r in reports],
    }
