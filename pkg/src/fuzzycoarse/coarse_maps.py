"""Maps between finite fuzzy metric spaces: expansiveness and properness
moduli, closeness, coarse inverses, and witness transport."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import DomainError
from .fuzzy_space import BoundedWitness, FuzzySpace, StandardMetric, check_radius, check_time, witness_for_min
from .numerics import DEFAULT_TOL, Tolerance
from .property_a import (ParamTuple, WitnessCertificate, WitnessFamily, close_pairs, ratio_check,
                         set_counts, verify_witness)

DEFAULT_LADDER = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True, eq=False)
class PointMap:
    source: FuzzySpace
    target: FuzzySpace
    images: tuple

    def __post_init__(self):
        imgs = tuple(int(v) for v in self.images)
        if len(imgs) != self.source.n:
            raise DomainError(f"map is not total: {len(imgs)} images for {self.source.n} points")
        if any(not 0 <= v < self.target.n for v in imgs):
            raise DomainError("map sends a point outside the target")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def of(cls, source: FuzzySpace, target: FuzzySpace, mapping: Mapping) -> "PointMap":
        imgs = [None] * source.n
        for x, y in mapping.items():
            imgs[source.idx(x)] = target.idx(y)
        missing = [source.labels[i] for i, v in enumerate(imgs) if v is None]
        if missing:
            raise DomainError(f"map is not total: no image for {missing[:5]}")
        return cls(source, target, tuple(imgs))

    @classmethod
    def identity(cls, space: FuzzySpace) -> "PointMap":
        return cls(space, space, tuple(range(space.n)))

    def __call__(self, x) -> int:
        return self.images[self.source.idx(x)]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.images, dtype=int)

    def then(self, other: "PointMap") -> "PointMap":
        """other ∘ self."""
        if other.source is not self.target and other.source.n != self.target.n:
            raise DomainError("maps do not compose")
        return PointMap(self.source, other.target, tuple(other.images[v] for v in self.images))

    def as_dict(self) -> dict:
        return {self.source.labels[i]: self.target.labels[v] for i, v in enumerate(self.images)}


def _pulled(space: FuzzySpace, f: np.ndarray, t: float) -> np.ndarray:
    """M(f(x), f(x'), t) as a (source x source) matrix."""
    return space.matrix(t)[np.ix_(f, f)]


@dataclass
class ModulusRow:
    level: float  # A (expansive) or C (proper)
    t: float
    value: float  # B or D
    t_prime: float
    pairs: int


@dataclass
class ModulusTable:
    kind: str
    rows: list
    passed: bool
    trend: dict = field(default_factory=dict)  # t -> ladder verdict (proper only)
    notes: list = field(default_factory=list)

    def modulus(self, t: float) -> dict:
        return {row.level: row.value for row in self.rows if row.t == t}


def _ladder(levels) -> list:
    levels = sorted(float(a) for a in levels)
    if not levels or any(a <= 0 for a in levels):
        raise DomainError("ladder levels must be positive")
    return levels


def check_uniformly_expansive(f: PointMap, levels=DEFAULT_LADDER, t_grid=None, t_prime=None) -> ModulusTable:
    """Rows (A, t) -> B = min M2(f x, f x', t') over pairs with M1(x, x', t) >= A."""
    levels = _ladder(levels)
    t_grid = f.source.t_grid if t_grid is None else [check_time(t) for t in t_grid]
    t_prime = f.target.t_max if t_prime is None else check_time(t_prime)
    img = _pulled(f.target, f.array, t_prime)
    rows = []
    for t in t_grid:
        m1 = f.source.matrix(t)
        for a in levels:
            mask = m1 >= a  # the diagonal always qualifies
            rows.append(ModulusRow(a, float(t), float(img[mask].min()), t_prime, int(mask.sum())))
    passed = all(row.value > 0 for row in rows)
    return ModulusTable("expansive", rows, passed,
                        notes=["on a finite space every row has B > 0; the table records the modulus A -> B"])


def check_effectively_proper(f: PointMap, levels=DEFAULT_LADDER, t_grid=None, t_prime=None) -> ModulusTable:
    """Rows (C, t) -> D = min M1(x, x', t') over pairs with M2(f x, f x', t) >= C.

    Every finite map has finite moduli, so the verdict is a ladder trend: at
    some t, D at the top rung is 1 or strictly above D at the bottom rung.
    A map whose D never improves along the C-ladder is flagged non-proper.
    """
    levels = _ladder(levels)
    t_grid = f.target.t_grid if t_grid is None else [check_time(t) for t in t_grid]
    t_prime = f.source.t_max if t_prime is None else check_time(t_prime)
    src = f.source.matrix(t_prime)
    rows, trend = [], {}
    for t in t_grid:
        m2 = _pulled(f.target, f.array, t)
        values = []
        for c in levels:
            mask = m2 >= c
            values.append(float(src[mask].min()))
            rows.append(ModulusRow(c, float(t), values[-1], t_prime, int(mask.sum())))
        trend[float(t)] = values[-1] == 1.0 or values[-1] > values[0]
    return ModulusTable("proper", rows, any(trend.values()), trend,
                        ["verdict: D improves along the C-ladder at some t"])


def check_closeness(f: PointMap, g: PointMap, r: float | None = None, t: float | None = None):
    """Witness that M(f x, g x, t) > 1 - r for all x, or None at a given (r, t)."""
    if f.source.n != g.source.n or f.target.n != g.target.n:
        raise DomainError("closeness needs maps with a shared source and target")
    tt = f.target.t_max if t is None else check_time(t)
    vals = f.target.matrix(tt)[f.array, g.array]
    lowest = float(vals.min())
    if r is None:
        return witness_for_min(lowest, tt)
    return BoundedWitness(check_radius(r), tt) if lowest > 1.0 - r else None


def check_coarsely_onto(f: PointMap, r: float | None = None, t: float | None = None):
    """Witness that every y is (r, t)-close to some f(x), or None at a given (r, t)."""
    tt = f.target.t_max if t is None else check_time(t)
    best = f.target.matrix(tt)[f.array].max(axis=0)
    lowest = float(best.min())
    if r is None:
        return witness_for_min(lowest, tt)
    return BoundedWitness(check_radius(r), tt) if lowest > 1.0 - r else None


def nearest_preimage(f: PointMap, t: float | None = None) -> PointMap:
    """g(y) = the x whose image maximizes M(f x, y, t), smallest index on ties."""
    tt = f.target.t_max if t is None else check_time(t)
    m = f.target.matrix(tt)[f.array]  # (source, target)
    return PointMap(f.target, f.source, tuple(int(i) for i in np.argmax(m, axis=0)))


@dataclass
class InverseResult:
    inverse: PointMap | None
    candidate: PointMap
    expansive: ModulusTable
    fg_close: BoundedWitness | None
    gf_close: BoundedWitness | None
    reasons: list = field(default_factory=list)


def find_coarse_inverse(f: PointMap, levels=DEFAULT_LADDER) -> InverseResult:
    reasons = []
    if not check_uniformly_expansive(f, levels).passed:
        reasons.append("f is not uniformly expansive")
    if not check_effectively_proper(f, levels).passed:
        reasons.append("f fails the properness ladder")
    onto = check_coarsely_onto(f)
    g = nearest_preimage(f)
    g_exp = check_uniformly_expansive(g, levels)
    fg = check_closeness(g.then(f), PointMap.identity(f.target))
    gf = check_closeness(f.then(g), PointMap.identity(f.source))
    if onto is None:
        reasons.append("f is not coarsely onto")
    if not g_exp.passed:
        reasons.append("candidate inverse is not uniformly expansive")
    if fg is None or gf is None:
        reasons.append("compositions are not close to the identities")
    return InverseResult(None if reasons else g, g, g_exp, fg, gf, reasons)


# -- transport -------------------------------------------------------------------


def push_sets(w: WitnessFamily, f: np.ndarray, pick: Sequence[int], n_target: int) -> WitnessFamily:
    """B_{y0} = ⋃_y {y} × {1..n_y}, n_y = #{(x, m) ∈ A_{pick[y0]} : f(x) = y}."""
    heights = np.zeros((len(pick), n_target), dtype=np.int64)
    for y0, src in enumerate(pick):
        for x, _ in w.sets[src]:
            heights[y0, f[x]] += 1
    return WitnessFamily.from_heights(heights)


@dataclass
class TransportReport:
    sizes_match: bool
    pullback_ok: bool | None
    monotone_ok: bool | None
    certificate: WitnessCertificate | None
    source_worst: float | None = None

    @property
    def passed(self) -> bool:
        return self.sizes_match and self.certificate is not None and self.certificate.passed


def transport_witness(f: PointMap, g: PointMap, w: WitnessFamily, p: ParamTuple | None = None,
                      tol: Tolerance = DEFAULT_TOL) -> tuple:
    """Move a witness on X to Y along f with coarse inverse g."""
    if len(w) != f.source.n:
        raise DomainError("witness does not match the source space")
    if any(not w.sets[x] for x in g.images):
        raise DomainError("transport needs nonempty A_{g(y)}")
    out = push_sets(w, f.array, g.images, f.target.n)
    sizes = all(len(out.sets[y]) == len(w.sets[g.images[y]]) for y in range(f.target.n))
    if p is None:
        return out, TransportReport(sizes, None, None, None)
    cert = verify_witness(f.target, out, p, tol)
    pairs = close_pairs(f.target, p.r, p.t)
    gi = np.asarray(g.images)
    pulled = [(gi[a], gi[b]) for a, b in pairs if gi[a] != gi[b]]
    src_worst, _, pull_ok, _ = ratio_check(w, pulled, p.eps, tol)
    mono = True
    for a, b in pairs:
        ia, sa = set_counts(out.sets[a], out.sets[b])
        ib, sb = set_counts(w.sets[gi[a]], w.sets[gi[b]])
        if ia < ib or sa > sb:
            mono = False
    return out, TransportReport(sizes, pull_ok, mono, cert, src_worst)


def retraction(space: FuzzySpace, sub: Sequence[int], t: float | None = None) -> np.ndarray:
    """Nearest point of ``sub`` (positions within it) for every point, smallest index on ties."""
    sub = np.asarray(sorted(set(space.idxs(sub))), dtype=int)
    tt = space.t_max if t is None else check_time(t)
    return np.argmax(space.matrix(tt)[:, sub], axis=1)


def restrict_witness(space: FuzzySpace, sub, w: WitnessFamily, p: ParamTuple | None = None,
                     tol: Tolerance = DEFAULT_TOL) -> tuple:
    """Restrict a witness to a subspace by transport along the nearest-point retraction."""
    idx = sorted(set(space.idxs(sub)))
    if not idx:
        raise DomainError("subspace must be nonempty")
    subspace = space.subspace(idx)
    rho = PointMap(space, subspace, tuple(int(v) for v in retraction(space, idx)))
    inc = PointMap(subspace, space, tuple(idx))
    out, report = transport_witness(rho, inc, w, p, tol)
    return subspace, out, report


# -- metric targets ----------------------------------------------------------------


@dataclass
class MetricModuli:
    expansive: list  # (A, t, S)
    proper: list  # (R, C, t, D, t')
    agrees: bool
    expansive_verdict: bool
    proper_verdict: bool
    mismatches: list = field(default_factory=list)


def metric_target_moduli(f: PointMap, levels=DEFAULT_LADDER, t_grid=None, tol: Tolerance = DEFAULT_TOL) -> MetricModuli:
    """Moduli in metric units for a map into a standard space, checked against
    the fuzzy-level tables through B = t'/(t' + S) and R = t(1 - C)/C."""
    if not isinstance(f.target.metric, StandardMetric):
        raise DomainError("metric moduli need a standard target space")
    d = f.target.metric.d[np.ix_(f.array, f.array)]
    fuzzy_e = check_uniformly_expansive(f, levels, t_grid)
    fuzzy_p = check_effectively_proper(f, levels, t_grid)
    src_t = fuzzy_p.rows[0].t_prime if fuzzy_p.rows else f.source.t_max
    src = f.source.matrix(src_t)
    exp_rows, prop_rows, bad = [], [], []
    for row in fuzzy_e.rows:
        mask = f.source.matrix(row.t) >= row.level
        S = float(d[mask].max())
        exp_rows.append((row.level, row.t, S))
        if abs(row.t_prime / (row.t_prime + S) - row.value) > tol.tau:
            bad.append(("expansive", row.level, row.t))
    trend = {}
    for row in fuzzy_p.rows:
        R = row.t * (1.0 - row.level) / row.level
        mask = d <= R
        D = float(src[mask].min())
        prop_rows.append((R, row.level, row.t, D, src_t))
        if abs(D - row.value) > tol.tau:
            bad.append(("proper", row.level, row.t))
        trend.setdefault(row.t, []).append(D)
    proper_verdict = any(v[-1] == 1.0 or v[-1] > v[0] for v in trend.values())
    return MetricModuli(exp_rows, prop_rows, not bad, all(np.isfinite(s) for _, _, s in exp_rows),
                        proper_verdict, bad)
