import json

import pytest

from fuzzycoarse import formats as fm
from fuzzycoarse.cli import main
from fuzzycoarse.fuzzy_space import builtin_space


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def path16(tmp_path):
    p = tmp_path / "path16.json"
    assert run("gen", "path", "--n", 16, "--out", p) == 0
    cover = tmp_path / "cover.json"
    cover.write_text(json.dumps({"sets": [[str(i) for i in range(16)], [str(i) for i in range(8, 16)]]}))
    return p, cover


def test_gen_then_verify_axioms(tmp_path, capsys):
    p = tmp_path / "np16.json"
    assert run("gen", "nat-product", "--n", 16, "--out", p) == 0
    assert run("verify-axioms", "--space", p) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_gen_is_byte_identical(tmp_path):
    a, b, c = (tmp_path / f"{k}.json" for k in "abc")
    run("gen", "random-standard", "--n", 8, "--seed", 3, "--out", a)
    run("gen", "random-standard", "--n", 8, "--seed", 3, "--out", b)
    run("gen", "random-standard", "--n", 8, "--seed", 4, "--out", c)
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    assert run("verify-axioms", "--space", a) == 0


def test_ball(path16, capsys):
    assert run("ball", "--space", path16[0], "--x", "3", "--r", 0.6, "--t", 1) == 0
    assert capsys.readouterr().out.split() == ["2", "3", "4"]


def test_property_a_verify_equal_sets(path16, tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"params": {"eps": 0.1, "r": 0.6, "t": 1.0},
                             "sets": {str(x): [["0", 1], ["5", 2]] for x in range(16)}}))
    cert = tmp_path / "cert.json"
    assert run("property-a", "verify", "--space", path16[0], "--witness", w, "--out", cert) == 0
    assert "worst ratio 0 " in capsys.readouterr().out
    doc = json.loads(cert.read_text())
    assert doc["passed"] and doc["worst_ratio"] == 0.0


def test_property_a_verify_failure_exit_1(path16, tmp_path):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"sets": {str(x): [[str(x), 1]] for x in range(16)}}))
    cert = tmp_path / "cert.json"
    assert run("property-a", "verify", "--space", path16[0], "--witness", w,
               "--eps", 0.5, "--r", 0.6, "--t", 1, "--out", cert) == 1
    assert not json.loads(cert.read_text())["passed"]


def test_from_cover_then_verify(path16, tmp_path):
    space, cover = path16
    w, cert = tmp_path / "w.json", tmp_path / "c.json"
    assert run("property-a", "from-cover", "--space", space, "--cover", cover,
               "--eps", 0.5, "--r", 0.6, "--t", 1, "--out", w, "--cert", cert) == 0
    assert json.loads(cert.read_text())["passed"]
    assert run("property-a", "verify", "--space", space, "--witness", w) == 0


def test_transform_roundtrip(path16, tmp_path, capsys):
    space, cover = path16
    out, cert = tmp_path / "w.json", tmp_path / "rt.json"
    assert run("transform", "roundtrip", "--space", space, "--cover", cover,
               "--eps", 0.01, "--r", 0.6, "--t", 1, "--out", out, "--cert", cert) == 0
    rep = json.loads(cert.read_text())
    assert rep["passed"] and rep["eps_final"] > 0.01
    assert "composed eps'" in capsys.readouterr().out
    w, _ = fm.witness_from_json(builtin_space("path", 16), json.loads(out.read_text()))
    assert len(w.sets) == 16


def test_transform_single_steps(path16, tmp_path):
    space, cover = path16
    f1, f2 = tmp_path / "f1.json", tmp_path / "f2.json"
    assert run("transform", "i-ii", "--space", space, "--cover", cover,
               "--eps", 0.5, "--r", 0.6, "--t", 1, "--out", f1) == 0
    assert json.loads(f1.read_text())["kind"] == "l1"
    assert run("transform", "ii-iii", "--space", space, "--input", f1,
               "--eps", 1.0, "--r", 0.6, "--t", 1, "--out", f2) == 0
    assert run("transform", "iii-iv", "--space", space, "--input", f2) == 0
    # wrong input kind for the step is an input error
    assert run("transform", "v-vi", "--space", space, "--input", f2) == 2


def test_asdim_adx_deterministic(tmp_path, capsys):
    p = tmp_path / "p.json"
    run("gen", "path", "--n", 16, "--out", p)
    capsys.readouterr()
    args = ("asdim", "adx", "--space", p, "--r", 0.5, "--ladder", "0.25,0.5", "--bound", "0.9,1", "--seed", 7,
            "--format", "json")
    assert run(*args) == 0
    first = capsys.readouterr().out
    run(*args)
    assert capsys.readouterr().out == first
    assert json.loads(first)["seed"] == 7


def test_coarse_map_check_identity(path16, tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"map": {str(i): str(i) for i in range(16)}}))
    assert run("coarse-map", "check", "--space", path16[0], "--space", path16[0], "--map", m) == 0


def test_embed_report(path16, tmp_path):
    out = tmp_path / "e.json"
    assert run("embed", "report", "--space", path16[0], "--cover", path16[1], "--levels", 3, "--out", out) == 0
    assert json.loads(out.read_text())["monotone_violations"] == []


@pytest.mark.parametrize("content", ["{not json", json.dumps({"metric": {"kind": "nope"}})])
def test_malformed_space_exit_2(tmp_path, capsys, content):
    p = tmp_path / "bad.json"
    p.write_text(content)
    assert run("verify-axioms", "--space", p) == 2
    assert str(p) in capsys.readouterr().err


def test_missing_flag_exit_2(capsys):
    assert run("ball") == 2
    assert "--space" in capsys.readouterr().err


def test_bad_witness_label_exit_2(path16, tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"sets": {"99": [["0", 1]]}}))
    assert run("property-a", "verify", "--space", path16[0], "--witness", w, "--eps", 1, "--r", 0.5, "--t", 1) == 2
    assert "witness.sets" in capsys.readouterr().err.replace(str(w), "witness")
