"""JSON round-trips and the command line surface.

The CLI is driven in-process through main(argv); exit codes follow the
documented contract: 0 clean, 1 failed invariant, 2 unusable input.
"""

import json

import numpy as np
import pytest

from corrlab.cli import main
from corrlab.errors import ParseError, SchemaError
from corrlab.generators import (
    embedding_hom,
    random_algebra,
    random_chain,
    random_correspondence,
    random_equivalence,
    random_simplex,
    random_unital_hom,
)
from corrlab.linalg import frob
from corrlab.modules import corr_close, iso_distance, make_iso, tensor_corrs
from corrlab.nerve import (
    HornSpec,
    face,
    gamma_simplex,
    identity_iso,
    make_simplex,
    simplex_close,
    structural_hash,
    validate_simplex,
)
from corrlab.serialize import dump_value, load_value


# ---------------------------------------------------------------------------
# serialization


def test_algebra_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    a = random_algebra(rng, label="left")
    path = tmp_path / "a.json"
    dump_value(a, path)
    back = load_value(path)
    assert back == a and back.label == "left"


def test_hom_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    phi = random_unital_hom(random_algebra(rng, max_blocks=2, max_size=2), rng)
    path = tmp_path / "phi.json"
    dump_value(phi, path)
    back = load_value(path)
    assert back.src == phi.src and back.dst == phi.dst
    assert frob(back.matrix - phi.matrix) < 1e-12
    assert np.array_equal(back.mult_matrix, phi.mult_matrix)


def test_corr_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    a = random_algebra(rng, max_blocks=2, max_size=2)
    b = random_algebra(rng, max_blocks=2, max_size=2)
    corr = random_correspondence(a, b, rng)
    path = tmp_path / "corr.json"
    dump_value(corr, path)
    assert corr_close(load_value(path), corr, 1e-12)


def test_iso_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    b = random_algebra(rng, max_blocks=2, max_size=2)
    e = random_equivalence(b, rng)
    w = identity_iso(e)
    path = tmp_path / "iso.json"
    dump_value(w, path)
    assert iso_distance(load_value(path), w) < 1e-12


def test_simplex_and_horn_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    s = random_simplex(rng, 2, twist=True, max_mult=1)
    path = tmp_path / "s.json"
    dump_value(s, path)
    back = load_value(path)
    assert simplex_close(back, s)
    validate_simplex(back)

    horn = HornSpec(2, 1, {0: face(s, 0), 2: face(s, 2)})
    hpath = tmp_path / "h.json"
    dump_value(horn, hpath)
    hback = load_value(hpath)
    assert hback.n == 2 and hback.k == 1
    assert simplex_close(hback.faces[0], horn.faces[0])


def test_parse_errors(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ParseError):
        load_value(missing)
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(ParseError, match="line"):
        load_value(empty)
    bad = tmp_path / "bad.json"
    bad.write_text('{"blocks": [2, 1],')
    with pytest.raises(ParseError):
        load_value(bad)


def test_schema_errors(tmp_path):
    p = tmp_path / "odd.json"
    p.write_text(json.dumps({"rows": 3}))
    with pytest.raises(SchemaError):
        load_value(p)
    p2 = tmp_path / "half.json"
    p2.write_text(json.dumps({"src": {"blocks": [2]}, "dst": {"blocks": [2]}}))
    with pytest.raises(SchemaError):
        load_value(p2)


# ---------------------------------------------------------------------------
# CLI


def test_cli_make_and_validate(tmp_path, capsys):
    apath = str(tmp_path / "a.json")
    assert main(["make", "algebra", "--blocks", "2,1", "--label", "A", "--out", apath]) == 0
    assert load_value(apath).blocks == (2, 1)
    assert main(["validate", apath]) == 0
    out = capsys.readouterr().out
    assert "all invariants pass" in out

    spath = str(tmp_path / "s.json")
    assert main(["make", "simplex", "--n", "2", "--twist", "--out", spath]) == 0
    assert main(["validate", spath]) == 0
    # flag placement before the subcommand is accepted too
    assert main(["--seed", "7", "make", "simplex", "--out", spath]) == 0
    assert main(["--eps", "1e-9", "validate", spath]) == 0


def test_cli_make_hom_and_gamma(tmp_path, capsys):
    apath = str(tmp_path / "a.json")
    hpath = str(tmp_path / "h.json")
    cpath = str(tmp_path / "c.json")
    assert main(["make", "algebra", "--blocks", "2", "--out", apath]) == 0
    assert main(["make", "hom", "--src", apath, "--out", hpath]) == 0
    assert main(["validate", hpath]) == 0
    assert main(["gamma", "--hom", hpath, "--out", cpath]) == 0
    assert main(["validate", cpath]) == 0
    capsys.readouterr()


def test_cli_simplex_dimension_cap(tmp_path, capsys):
    assert main(["make", "simplex", "--n", "4", "--out", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_validate_flags_broken_simplex(tmp_path, capsys):
    rng = np.random.default_rng(5)
    s = random_simplex(rng, 3, max_mult=1)
    cells = dict(s.cells)
    c = cells[(0, 1, 2)]
    cells[(0, 1, 2)] = make_iso(c.src, c.dst, [-u for u in c.blocks])
    bad = make_simplex(list(s.algebras), dict(s.edges), cells, validate=False)
    path = tmp_path / "bad.json"
    dump_value(bad, path)
    assert main(["validate", str(path)]) == 1
    out = capsys.readouterr().out
    assert "pentagon: FAIL" in out


def test_cli_morita(tmp_path, capsys):
    rng = np.random.default_rng(6)
    e = random_equivalence(random_algebra(rng, max_blocks=2, max_size=2), rng)
    epath = tmp_path / "e.json"
    dump_value(e, epath)
    wpath = tmp_path / "w.json"
    assert main(["morita", "--module", str(epath), "--out", str(wpath)]) == 0
    doc = json.loads(wpath.read_text())
    assert set(doc) == {"inverse", "counit_left", "counit_right"}
    capsys.readouterr()
    # a non-equivalence is a validation failure, not a crash
    from corrlab.algebra import make_algebra
    from corrlab.bicategory import gamma_of_hom

    doubled = gamma_of_hom(
        embedding_hom(make_algebra((1,)), make_algebra((2,)), np.array([[2]]), rng)
    )
    cpath = tmp_path / "c.json"
    dump_value(doubled, cpath)
    assert main(["morita", "--module", str(cpath)]) == 1


def test_cli_fill_inner_and_outer(tmp_path, capsys):
    rng = np.random.default_rng(7)
    s = random_simplex(rng, 2, max_mult=1)
    horn = HornSpec(2, 1, {0: face(s, 0), 2: face(s, 2)})
    hpath = tmp_path / "horn.json"
    dump_value(horn, hpath)
    fpath = tmp_path / "filled.json"
    assert main(["fill", "--horn", str(hpath), "--out", str(fpath)]) == 0
    filled = load_value(fpath)
    assert corr_close(filled.edges[(0, 1)], s.edges[(0, 1)])
    assert main(["validate", str(fpath)]) == 0
    capsys.readouterr()

    # special outer horn with an equivalence tail
    chain = random_chain(rng, 1, max_mult=1)
    tail = chain[-1].dst
    chain.append(embedding_hom(tail, tail, np.eye(tail.nblocks, dtype=np.int64), rng))
    s2 = gamma_simplex(chain, validate=False)
    horn2 = HornSpec(2, 2, {0: face(s2, 0), 1: face(s2, 1)})
    h2path = tmp_path / "outer.json"
    dump_value(horn2, h2path)
    assert main(["fill", "--horn", str(h2path), "--out", str(fpath)]) == 0
    assert main(["validate", str(fpath)]) == 0
    capsys.readouterr()


def test_cli_subdivide(tmp_path, capsys):
    spath = str(tmp_path / "s.json")
    opath = str(tmp_path / "sd.json")
    assert main(["make", "simplex", "--n", "2", "--out", spath]) == 0
    assert main(["subdivide", "--simplex", spath, "--out", opath]) == 0
    doc = json.loads((tmp_path / "sd.json").read_text())
    assert len(doc["vertices"]) == 7
    assert len(doc["homs"]) == sum(
        1
        for a in doc["vertices"]
        for b in doc["vertices"]
        if set(tuple(a)) <= set(tuple(b))
    )
    assert main(["subdivide", "--simplex", spath, "--n", "3"]) == 2
    capsys.readouterr()


def test_cli_extend_k0_with_trace(tmp_path, capsys):
    spath = str(tmp_path / "s.json")
    tpath = tmp_path / "trace.json"
    opath = str(tmp_path / "k0.json")
    assert main(["make", "simplex", "--n", "2", "--out", spath]) == 0
    assert (
        main(
            [
                "extend",
                "--simplex",
                spath,
                "--functor",
                "k0",
                "--target",
                "k0nerve",
                "--trace",
                str(tpath),
                "--out",
                opath,
            ]
        )
        == 0
    )
    trace = json.loads(tpath.read_text())
    shape = [(tuple(e["horn"]), e["kind"]) for e in trace["fills"]]
    assert shape == [((3, 2), "inner")] * 3 + [((3, 3), "special")]
    doc = json.loads((tmp_path / "k0.json").read_text())
    assert set(doc) == {"ranks", "edges"}
    capsys.readouterr()


def test_cli_extend_gamma_guided(tmp_path, capsys):
    rng = np.random.default_rng(8)
    sig = gamma_simplex(random_chain(rng, 2, max_mult=1))
    spath = tmp_path / "g.json"
    dump_value(sig, spath)
    opath = tmp_path / "out.json"
    assert (
        main(
            [
                "extend",
                "--simplex",
                str(spath),
                "--functor",
                "gamma",
                "--target",
                "ncorr",
                "--guided",
                "--out",
                str(opath),
            ]
        )
        == 0
    )
    back = load_value(opath)
    assert simplex_close(back, sig)
    capsys.readouterr()
    # mismatched functor and target is a usage error
    assert (
        main(["extend", "--simplex", str(spath), "--functor", "k0", "--target", "ncorr"])
        == 2
    )


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.json")]) == 2
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert main(["validate", str(empty)]) == 2
    assert main(["validate"]) == 2
    capsys.readouterr()


def test_cli_selftest_single_suite(tmp_path, capsys):
    rpath = tmp_path / "report.json"
    assert main(["selftest", "--suite", "csd-combinatorics", "--out", str(rpath)]) == 0
    doc = json.loads(rpath.read_text())
    assert doc["ok"] is True
    assert [s["suite"] for s in doc["suites"]] == ["csd-combinatorics"]
    err = capsys.readouterr().err
    assert "csd-combinatorics" in err
