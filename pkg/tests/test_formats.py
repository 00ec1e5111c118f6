import json

import numpy as np
import pytest

from fuzzycoarse import formats as fm
from fuzzycoarse.characterizations import Kernel, L1Field, L2Field, PropagatedOperator
from fuzzycoarse.coarse_maps import PointMap
from fuzzycoarse.coarse_structure import Entourage
from fuzzycoarse.covers_asdim import Cover, DisjointFamilies
from fuzzycoarse.exceptions import FormatError
from fuzzycoarse.fuzzy_space import (FuzzySpace, PointSet, SampledMetric, Window, builtin_space, random_metric,
                                     random_stationary_values, standard_space, stationary_space)
from fuzzycoarse.numerics import SymMatrix, TNorm
from fuzzycoarse.property_a import ParamTuple, WitnessFamily

PATH = builtin_space("path", 8)


def roundtrip(obj):
    return json.loads(fm.dumps(obj))


def spaces():
    rng = np.random.default_rng(0)
    grid = np.array([0.5, 1.0, 2.0])
    cube = np.ones((3, 3, 3))
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        cube[i, j] = cube[j, i] = grid / (grid + 1.0)
    return [PATH, builtin_space("nat-ratio", 5), standard_space(random_metric(6, rng)),
            stationary_space(random_stationary_values(5, rng)),
            FuzzySpace(PointSet(("a", "b", "c")), TNorm.PRODUCT, SampledMetric(grid, cube), "sampled")]


@pytest.mark.parametrize("space", spaces(), ids=lambda s: s.name or "space")
def test_space_roundtrip(space):
    back = fm.space_from_json(roundtrip(fm.space_to_json(space)))
    assert back.labels == space.labels and back.tnorm == space.tnorm
    for t in (0.5, 1.0, 2.0):
        assert np.allclose(back.matrix(t), space.matrix(t), atol=1e-15)
    assert fm.dumps(fm.space_to_json(back)) == fm.dumps(fm.space_to_json(space))


@pytest.mark.parametrize("heights", [True, False])
def test_witness_roundtrip(heights):
    rng = np.random.default_rng(1)
    w = WitnessFamily.from_heights(rng.integers(0, 3, (8, 8)))
    p = ParamTuple(0.5, 0.6, 1.0)
    back, q = fm.witness_from_json(PATH, roundtrip(fm.witness_to_json(PATH, w, p, heights)))
    assert back.sets == w.sets and q == p


def test_non_prefix_witness_uses_sets():
    w = WitnessFamily(tuple(frozenset({(0, 2)}) for _ in range(8)))
    doc = fm.witness_to_json(PATH, w)
    assert "sets" in doc and doc["params"] is None
    assert fm.witness_from_json(PATH, doc)[0].sets == w.sets


def test_cover_families_entourage_map_roundtrip():
    cover = Cover((frozenset(range(8)), frozenset(range(4, 8))))
    assert fm.cover_from_json(PATH, roundtrip(fm.cover_to_json(PATH, cover))).sets == cover.sets
    fams = DisjointFamilies.of(PATH, [[range(0, 2), range(4, 6)], [range(2, 4), range(6, 8)]], 0.5, 1.0)
    back = fm.families_from_json(PATH, roundtrip(fm.families_to_json(PATH, fams)))
    assert back.families == fams.families and (back.r, back.t) == (fams.r, fams.t)
    E = Entourage(frozenset({(0, 1), (3, 2)}))
    assert fm.entourage_from_json(PATH, roundtrip(fm.entourage_to_json(PATH, E))).pairs == E.pairs
    f = PointMap(PATH, PATH, tuple(7 - i for i in range(8)))
    assert fm.map_from_json(PATH, PATH, roundtrip(fm.map_to_json(f))).images == f.images


def test_matrix_artifacts_roundtrip(tmp_path):
    win = Window(1.0 - 2 ** -53, 2.0)
    k = Kernel(SymMatrix(np.eye(8)), win)
    S = PropagatedOperator(np.diag(np.arange(1.0, 9.0)), Window(0.25, 1.0))
    items = [(k, Kernel), (S, PropagatedOperator), (L1Field(np.eye(8), win), L1Field),
             (L2Field(np.eye(8) * 0.5, win), L2Field)]
    writers = {Kernel: fm.kernel_to_json, PropagatedOperator: fm.operator_to_json,
               L1Field: fm.field_to_json, L2Field: fm.field_to_json}
    for obj, cls in items:
        path = tmp_path / f"{cls.__name__}.json"
        fm.write_json(writers[cls](PATH, obj), path)
        back = fm.load_artifact(PATH, path)
        assert type(back) is cls
        # the threshold survives even where 1 - r rounds away
        assert back.window.threshold == obj.window.threshold and back.window.t == obj.window.t


def test_dumps_is_deterministic_and_finite():
    assert fm.dumps({"b": float("inf"), "a": np.float64(1.5)}) == '{\n  "b": "inf",\n  "a": 1.5\n}\n'
    assert fm.dumps({"s": frozenset({3, 1})}) == fm.dumps({"s": [1, 3]})


@pytest.mark.parametrize("doc, where", [
    ({"points": ["a"]}, "space"),
    ({"metric": {"kind": "nope"}, "points": ["a"], "tnorm": "product"}, "space.metric.kind"),
    ({"metric": {"kind": "standard", "d": [[0, 1], [1, 0]]}, "points": ["a", 1], "tnorm": "product"},
     "space.points"),
    ({"metric": {"kind": "standard", "d": [[0, 1], [2, 0]]}, "points": ["a", "b"], "tnorm": "product"},
     "space.metric.d"),
    ({"metric": {"kind": "builtin", "id": "path", "n": "8"}}, "space.metric.n"),
])
def test_space_format_errors(doc, where):
    with pytest.raises(FormatError) as err:
        fm.space_from_json(doc)
    assert err.value.where == where


@pytest.mark.parametrize("doc, where", [
    ({"heights": {"0": {"1": -1}}}, "witness.heights['0']['1']"),
    ({"heights": {"99": {}}}, "witness.heights"),
    ({"sets": {"0": [["1", "x"]]}}, "witness.sets['0'][0]"),
    ({"sets": {}, "params": {"eps": 0.5, "r": 2.0, "t": 1.0}}, "witness.params"),
    ({"sets": {}, "params": {"eps": "a", "r": 0.5, "t": 1.0}}, "witness.params.eps"),
])
def test_witness_format_errors(doc, where):
    with pytest.raises(FormatError) as err:
        fm.witness_from_json(PATH, doc)
    assert err.value.where == where


def test_read_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"a": 1,\n  oops}')
    with pytest.raises(FormatError) as err:
        fm.read_json(bad)
    assert err.value.where.endswith("line 2 column 3")
    with pytest.raises(FormatError):
        fm.read_json(tmp_path / "missing.json")


def test_matrix_shape_and_label_errors():
    doc = fm.kernel_to_json(PATH, Kernel(SymMatrix(np.eye(8)), Window(0.5, 1.0)))
    with pytest.raises(FormatError) as err:
        fm.kernel_from_json(PATH, dict(doc, labels=list("abcdefgh")))
    assert err.value.where == "kernel.labels"
    with pytest.raises(FormatError) as err:
        fm.kernel_from_json(PATH, dict(doc, matrix=np.eye(3).tolist()))
    assert err.value.where == "kernel.matrix"
    with pytest.raises(FormatError) as err:
        fm.map_from_json(PATH, PATH, {"from": "other", "map": {}})
    assert err.value.where == "map.from"
