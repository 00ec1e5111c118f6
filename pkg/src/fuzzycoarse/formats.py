"""JSON file formats for spaces, witnesses, covers, entourages, maps,
kernels/operators, vector fields and reports.

Writers emit keys in a fixed order so identical inputs give byte-identical
files. Readers raise :class:`FormatError` naming the offending field.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from pathlib import Path

import numpy as np

from .characterizations import L1Field, L2Field, Kernel, PropagatedOperator
from .coarse_maps import PointMap
from .coarse_structure import Entourage
from .covers_asdim import Cover, DisjointFamilies
from .exceptions import DomainError, FormatError
from .fuzzy_space import (DEFAULT_T_GRID, FuzzySpace, PointSet, SampledMetric, StandardMetric,
                          StationaryMetric, Window, builtin_space)
from .numerics import SymMatrix, TNorm
from .property_a import ParamTuple, WitnessFamily


# -- plumbing -------------------------------------------------------------------


def read_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file ({exc.strerror})", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, f"{path}: line {exc.lineno} column {exc.colno}") from None


def plain(obj):
    """JSON-ready copy: dataclasses in field order, arrays as lists, non-finite floats as strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        # derived verdicts are properties; reports still need them
        if isinstance(getattr(type(obj), "passed", None), property):
            out["passed"] = bool(obj.passed)
        return out
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return [plain(v) for v in sorted(obj)]
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (FuzzySpace, WitnessFamily)):
        return None  # large inputs are referenced by file, not embedded
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(plain(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def _get(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"missing field {key!r}", where)
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise FormatError(f"field {key!r} has the wrong type", f"{where}.{key}")
    return v


def _array(v, where, ndim=None) -> np.ndarray:
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("expected numbers", where) from None
    if ndim is not None and a.ndim != ndim:
        raise FormatError(f"expected a {ndim}-d array", where)
    return a


def _checked(fn, where):
    try:
        return fn()
    except FormatError:
        raise
    except DomainError as exc:
        raise FormatError(str(exc), where) from None


def _number(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError("expected a number", where)
    return float(v)


# -- spaces ---------------------------------------------------------------------


def space_to_json(space: FuzzySpace) -> dict:
    out = {"name": space.name, "tnorm": space.tnorm.value, "points": list(space.labels)}
    m = space.metric
    if space.builtin is not None:
        out["metric"] = {"kind": "builtin", "id": space.builtin[0], "n": space.builtin[1]}
    elif isinstance(m, StandardMetric):
        out["metric"] = {"kind": "standard", "d": m.d}
    elif isinstance(m, StationaryMetric):
        out["metric"] = {"kind": "stationary", "values": m.values}
    else:
        n = m.n
        out["metric"] = {"kind": "sampled", "t_grid": m.t_grid,
                         "values": {f"{i},{j}": m.values[i, j] for i in range(n) for j in range(i + 1, n)}}
    if not np.array_equal(space.t_grid, DEFAULT_T_GRID):
        out["t_grid"] = space.t_grid
    return plain(out)


def space_from_json(obj, where="space") -> FuzzySpace:
    metric = _get(obj, "metric", where, dict)
    kind = _get(metric, "kind", f"{where}.metric", str)
    mw = f"{where}.metric"
    if kind == "builtin":
        n = _get(metric, "n", mw, int)
        return _checked(lambda: builtin_space(_get(metric, "id", mw, str), n), mw)
    labels = _get(obj, "points", where, list)
    if not all(isinstance(p, str) for p in labels):
        raise FormatError("point labels must be strings", f"{where}.points")
    tnorm = _get(obj, "tnorm", where, str)
    grid = _array(obj["t_grid"], f"{where}.t_grid", 1) if "t_grid" in obj else DEFAULT_T_GRID
    if kind == "standard":
        met = _checked(lambda: StandardMetric(_array(_get(metric, "d", mw), f"{mw}.d", 2)), f"{mw}.d")
    elif kind == "stationary":
        met = _checked(lambda: StationaryMetric(_array(_get(metric, "values", mw), f"{mw}.values", 2)),
                       f"{mw}.values")
    elif kind == "sampled":
        tg = _array(_get(metric, "t_grid", mw), f"{mw}.t_grid", 1)
        vals = _get(metric, "values", mw, dict)
        n = len(labels)
        cube = np.ones((n, n, tg.size))
        for key, series in vals.items():
            kw = f"{mw}.values[{key!r}]"
            try:
                i, j = (int(s) for s in key.split(","))
            except ValueError:
                raise FormatError("keys must look like 'i,j'", kw) from None
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise FormatError("index out of range or on the diagonal", kw)
            s = _array(series, kw, 1)
            if s.size != tg.size:
                raise FormatError(f"expected {tg.size} samples", kw)
            cube[i, j] = cube[j, i] = s
        missing = [(i, j) for i in range(n) for j in range(i + 1, n)
                   if f"{i},{j}" not in vals and f"{j},{i}" not in vals]
        if missing:
            raise FormatError(f"no samples for pair {missing[0]}", f"{mw}.values")
        met = _checked(lambda: SampledMetric(tg, cube), mw)
    else:
        raise FormatError(f"unknown metric kind {kind!r}", f"{mw}.kind")
    return _checked(lambda: FuzzySpace(PointSet(tuple(labels)), TNorm.parse(tnorm), met,
                                       str(obj.get("name", "")), grid), where)


def load_space(path) -> FuzzySpace:
    return space_from_json(read_json(path), str(path))


# -- witnesses ------------------------------------------------------------------


def _params_json(p: ParamTuple | None):
    return None if p is None else {"eps": p.eps, "r": p.r, "t": p.t}


def witness_to_json(space: FuzzySpace, w: WitnessFamily, p: ParamTuple | None = None,
                    heights: bool | None = None) -> dict:
    """Sets form, or the shorter heights form when the family is made of prefixes."""
    lab = space.labels
    use_heights = w.is_prefix_form() if heights is None else heights
    out = {"params": _params_json(p)}
    if use_heights:
        h = w.heights(space.n)
        out["heights"] = {lab[x]: {lab[y]: int(h[x, y]) for y in np.flatnonzero(h[x])} for x in range(space.n)}
    else:
        out["sets"] = {lab[x]: [[lab[y], lv] for y, lv in sorted(a)] for x, a in enumerate(w.sets)}
    return plain(out)


def params_from_json(obj, where="params") -> ParamTuple | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise FormatError("expected an object", where)
    vals = [_number(_get(obj, k, where), f"{where}.{k}") for k in ("eps", "r", "t")]
    return _checked(lambda: ParamTuple(*vals), where)


def witness_from_json(space: FuzzySpace, obj, where="witness") -> tuple:
    """(WitnessFamily, ParamTuple or None)."""
    if not isinstance(obj, dict):
        raise FormatError("expected an object", where)
    p = params_from_json(obj.get("params"), f"{where}.params")
    pt = lambda lab, w_: _checked(lambda: space.idx(lab), w_)  # noqa: E731
    if "heights" in obj:
        h = np.zeros((space.n, space.n), dtype=np.int64)
        for x, row in _get(obj, "heights", where, dict).items():
            xi = pt(x, f"{where}.heights")
            if not isinstance(row, dict):
                raise FormatError("expected an object of heights", f"{where}.heights[{x!r}]")
            for y, v in row.items():
                if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                    raise FormatError("heights must be nonnegative integers", f"{where}.heights[{x!r}][{y!r}]")
                h[xi, pt(y, f"{where}.heights[{x!r}]")] = v
        return WitnessFamily.from_heights(h), p
    sets = [frozenset() for _ in range(space.n)]
    for x, members in _get(obj, "sets", where, dict).items():
        xi = pt(x, f"{where}.sets")
        acc = set()
        for k, item in enumerate(members):
            iw = f"{where}.sets[{x!r}][{k}]"
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[1], int)
                    and not isinstance(item[1], bool)):
                raise FormatError('expected ["<point>", level]', iw)
            acc.add((pt(item[0], iw), item[1]))
        sets[xi] = frozenset(acc)
    return _checked(lambda: WitnessFamily(tuple(sets)), where), p


# -- covers, families, entourages, maps -----------------------------------------------


def cover_to_json(space: FuzzySpace, cover: Cover) -> dict:
    lab = space.labels
    out = {"sets": [[lab[i] for i in sorted(s)] for s in cover.sets]}
    if cover.claims:
        out["claims"] = cover.claims
    return plain(out)


def _members(space, sets, where) -> list:
    if not isinstance(sets, list):
        raise FormatError("expected a list of point lists", where)
    out = []
    for k, s in enumerate(sets):
        if not isinstance(s, list):
            raise FormatError("expected a list of points", f"{where}[{k}]")
        out.append(_checked(lambda: space.idxs(s), f"{where}[{k}]"))
    return out


def cover_from_json(space: FuzzySpace, obj, where="cover") -> Cover:
    sets = _members(space, _get(obj, "sets", where), f"{where}.sets")
    claims = obj.get("claims") or {}
    if not isinstance(claims, dict):
        raise FormatError("claims must be an object", f"{where}.claims")
    return _checked(lambda: Cover(tuple(sets), dict(claims)), where)


def families_to_json(space: FuzzySpace, fams: DisjointFamilies) -> dict:
    lab = space.labels
    return plain({"r": fams.r, "t": fams.t,
                  "families": [[[lab[i] for i in sorted(s)] for s in fam] for fam in fams.families]})


def families_from_json(space: FuzzySpace, obj, where="families") -> DisjointFamilies:
    fams = _get(obj, "families", where, list)
    parsed = [_members(space, fam, f"{where}.families[{k}]") for k, fam in enumerate(fams)]
    r = _number(_get(obj, "r", where), f"{where}.r")
    t = _number(_get(obj, "t", where), f"{where}.t")
    return _checked(lambda: DisjointFamilies(tuple(tuple(f) for f in parsed), r, t), where)


def entourage_to_json(space: FuzzySpace, E: Entourage) -> dict:
    lab = space.labels
    return {"pairs": [[lab[a], lab[b]] for a, b in sorted(E.pairs)]}


def entourage_from_json(space: FuzzySpace, obj, where="entourage") -> Entourage:
    pairs = _get(obj, "pairs", where, list)
    out = []
    for k, pr in enumerate(pairs):
        if not (isinstance(pr, list) and len(pr) == 2):
            raise FormatError('expected ["x", "y"]', f"{where}.pairs[{k}]")
        out.append(tuple(_checked(lambda: space.idxs(pr), f"{where}.pairs[{k}]")))
    return Entourage(frozenset(out))


def map_to_json(f: PointMap) -> dict:
    return {"from": f.source.name, "to": f.target.name,
            "map": {f.source.labels[x]: f.target.labels[y] for x, y in enumerate(f.images)}}


def map_from_json(source: FuzzySpace, target: FuzzySpace, obj, where="map") -> PointMap:
    for key, sp in (("from", source), ("to", target)):
        name = obj.get(key) if isinstance(obj, dict) else None
        if name not in (None, "", sp.name) and sp.name:
            raise FormatError(f"map expects space {name!r} but got {sp.name!r}", f"{where}.{key}")
    mapping = _get(obj, "map", where, dict)
    return _checked(lambda: PointMap.of(source, target, mapping), f"{where}.map")


# -- kernels, operators, fields ---------------------------------------------------------


def window_json(win: Window) -> dict:
    # r alone loses the window when 1 - r is below float resolution; the threshold is kept too
    return {"r": win.r, "t": win.t, "threshold": win.threshold}


def window_from_json(obj, where="window") -> Window:
    t = _number(_get(obj, "t", where), f"{where}.t")
    if "threshold" in obj:
        return _checked(lambda: Window(_number(obj["threshold"], f"{where}.threshold"), t), where)
    return _checked(lambda: Window.from_r(_number(_get(obj, "r", where), f"{where}.r"), t), where)


def matrix_to_json(labels, matrix, window: Window, kind: str) -> dict:
    return plain({"kind": kind, "labels": list(labels), "matrix": np.asarray(matrix), "window": window_json(window)})


def kernel_to_json(space: FuzzySpace, k: Kernel) -> dict:
    return matrix_to_json(space.labels, k.matrix.entries, k.window, "kernel")


def operator_to_json(space: FuzzySpace, S: PropagatedOperator) -> dict:
    return matrix_to_json(space.labels, S.matrix, S.window, "operator")


def _matrix_parts(space: FuzzySpace, obj, where) -> tuple:
    labels = _get(obj, "labels", where, list)
    if list(labels) != list(space.labels):
        raise FormatError("labels do not match the space", f"{where}.labels")
    a = _array(_get(obj, "matrix", where), f"{where}.matrix", 2)
    if a.shape != (space.n, space.n):
        raise FormatError(f"expected a {space.n} x {space.n} matrix", f"{where}.matrix")
    return a, window_from_json(_get(obj, "window", where, dict), f"{where}.window")


def kernel_from_json(space: FuzzySpace, obj, where="kernel") -> Kernel:
    a, win = _matrix_parts(space, obj, where)
    return Kernel(_checked(lambda: SymMatrix(a, space.labels), f"{where}.matrix"), win)


def operator_from_json(space: FuzzySpace, obj, where="operator") -> PropagatedOperator:
    a, win = _matrix_parts(space, obj, where)
    return PropagatedOperator(a, win)


def field_to_json(space: FuzzySpace, f) -> dict:
    kind = "l1" if isinstance(f, L1Field) else "l2"
    return plain({"kind": kind, "labels": list(space.labels), "vectors": f.vectors,
                  "window": window_json(f.window)})


def field_from_json(space: FuzzySpace, obj, where="field"):
    kind = _get(obj, "kind", where, str)
    if kind not in ("l1", "l2"):
        raise FormatError("kind must be 'l1' or 'l2'", f"{where}.kind")
    obj = dict(obj, matrix=_get(obj, "vectors", where))
    a, win = _matrix_parts(space, obj, where)
    return (L1Field if kind == "l1" else L2Field)(a, win)


def load_artifact(space: FuzzySpace, path):
    """Kernel, operator or field file, dispatched on its ``kind`` (plain matrices read as kernels)."""
    obj = read_json(path)
    kind = obj.get("kind", "kernel") if isinstance(obj, dict) else None
    where = str(path)
    if kind == "operator":
        return operator_from_json(space, obj, where)
    if kind in ("l1", "l2"):
        return field_from_json(space, obj, where)
    if kind == "kernel":
        return kernel_from_json(space, obj, where)
    raise FormatError("unknown artifact kind", where)


def embedding_report_json(E) -> dict:
    lab = E.space.labels
    n = E.space.n
    pairs = []
    for x in range(n):
        for y in range(x + 1, n):
            pairs.append({"x": lab[x], "y": lab[y], "dist": float(E.dist[x, y]),
                          "blocks": E.blocks(x, y), "sqrt2_count": int(E.diagnostics.sqrt2_count[x, y])})
    return plain({"base": lab[E.base], "levels": E.cfg.N, "pairs": pairs})
