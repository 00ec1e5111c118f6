"""Property A witness families: verification and the explicit constructions
(cover-based chain lengths, the nat-product example, the subexponential
averaged field)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy import sparse

from .covers_asdim import Cover, lebesgue_check_threshold, multiplicity, uniform_bound
from .exceptions import CertificateError, DomainError
from .fuzzy_space import FuzzySpace, check_radius, check_time
from .numerics import DEFAULT_TOL, Tolerance, certify_lt


@dataclass(frozen=True)
class ParamTuple:
    eps: float
    r: float
    t: float

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise DomainError(f"eps must be positive, got {self.eps}")
        check_radius(self.r)
        check_time(self.t)


@dataclass(frozen=True, eq=False)
class WitnessFamily:
    """Per point x a finite set A_x of (point index, level) pairs, level >= 1."""

    sets: tuple  # of frozensets of (int, int)

    def __post_init__(self):
        clean = []
        for a in self.sets:
            a = frozenset((int(y), int(lv)) for y, lv in a)
            if any(lv < 1 for _, lv in a):
                raise DomainError("levels must be positive integers")
            clean.append(a)
        object.__setattr__(self, "sets", tuple(clean))

    @classmethod
    def from_heights(cls, heights) -> "WitnessFamily":
        """A_x = union over y of {y} x {1..h_x(y)} from a (points x points) array."""
        h = np.asarray(heights)
        if h.ndim != 2 or np.any(h < 0) or np.any(h != np.floor(h)):
            raise DomainError("heights must be a 2-d array of nonnegative integers")
        sets = []
        for row in h.astype(np.int64):
            sets.append(frozenset((int(y), lv) for y in np.flatnonzero(row) for lv in range(1, int(row[y]) + 1)))
        return cls(tuple(sets))

    def __len__(self):
        return len(self.sets)

    @cached_property
    def levels(self) -> int:
        """Largest level used (at least 1)."""
        return max((lv for a in self.sets for _, lv in a), default=1)

    @cached_property
    def indicator(self) -> sparse.csr_matrix:
        """0/1 rows chi_{A_x}; (y, level) sits in column y * levels + level - 1."""
        L = self.levels
        width = 1 + max((y for a in self.sets for y, _ in a), default=0)
        rows = np.repeat(np.arange(len(self.sets)), [len(a) for a in self.sets])
        cols = np.fromiter((y * L + lv - 1 for a in self.sets for y, lv in a), dtype=np.int64, count=len(rows))
        return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(self.sets), width * L))

    @cached_property
    def intersections(self) -> np.ndarray:
        """|A_x ∩ A_y| for every x, y."""
        return np.rint((self.indicator @ self.indicator.T).toarray()).astype(np.int64)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(a) for a in self.sets], dtype=np.int64)

    def counts(self, x: int, y: int) -> tuple:
        """(|A_x ∩ A_y|, |A_x Δ A_y|) from the cached intersection table."""
        inter = int(self.intersections[x, y])
        return inter, len(self.sets[x]) + len(self.sets[y]) - 2 * inter

    def projection(self, x: int) -> frozenset:
        return frozenset(y for y, _ in self.sets[x])

    def _per_point(self, weights: np.ndarray) -> np.ndarray:
        """Sum ``weights`` (one per indicator entry) within each point's level block."""
        ind = self.indicator
        width = ind.shape[1] // self.levels
        cols = ind.indices // self.levels
        rows = np.repeat(np.arange(ind.shape[0]), np.diff(ind.indptr))
        out = np.zeros((ind.shape[0], width), dtype=np.int64)
        np.add.at(out, (rows, cols), weights)
        return out

    def heights(self, n: int) -> np.ndarray:
        """Level counts |A_x(y)| as an array (valid for any sets, not just prefixes)."""
        per = self._per_point(np.ones(self.indicator.nnz, dtype=np.int64))
        h = np.zeros((len(self.sets), n), dtype=np.int64)
        k = min(n, per.shape[1])
        h[:, :k] = per[:, :k]
        return h

    def is_prefix_form(self) -> bool:
        # distinct positive levels with count h sum to h(h+1)/2 only when they are 1..h
        ind = self.indicator
        h = self._per_point(np.ones(ind.nnz, dtype=np.int64))
        total = self._per_point(ind.indices % self.levels + 1)
        return bool(np.all(total == h * (h + 1) // 2))

    def canonical(self) -> "WitnessFamily":
        """Same level counts, rewritten as prefixes {1..h}."""
        return WitnessFamily.from_heights(self.heights(1 + max((y for a in self.sets for y, _ in a), default=0)))


def set_counts(a: frozenset, b: frozenset) -> tuple:
    """(|a ∩ b|, |a Δ b|)."""
    inter = len(a & b)
    return inter, len(a) + len(b) - 2 * inter


@dataclass
class WitnessCertificate:
    params: ParamTuple
    passed: bool
    support_r: float | None
    support_t: float
    worst_ratio: float
    worst_pair: tuple | None
    close_pairs: int
    failures: list = field(default_factory=list)
    boundary: bool = False


def _structural_failures(space: FuzzySpace, w: WitnessFamily) -> list:
    out, n = [], space.n
    if len(w) != n:
        return [f"witness has {len(w)} sets for {n} points"]
    for x, a in enumerate(w.sets):
        if not a:
            out.append(f"A_{space.labels[x]} is empty")
        elif not 0 <= min(y for y, _ in a) <= max(y for y, _ in a) < n:
            out.append(f"A_{space.labels[x]} refers to an unknown point")
    return out


def support_window(space: FuzzySpace, w: WitnessFamily, tol: Tolerance = DEFAULT_TOL) -> tuple:
    """Minimal (r', t'): t' = grid max, 1 - r' = min M(x, y, t') over y in proj(A_x), shaved by margin."""
    t_prime = space.t_max
    m = space.matrix(t_prime)
    lowest = 1.0
    for x, a in enumerate(w.sets):
        proj = sorted({y for y, _ in a})
        if proj:
            lowest = min(lowest, float(m[x, proj].min()))
    return 1.0 - lowest * (1.0 - tol.margin), t_prime


def close_pairs(space: FuzzySpace, r: float, t: float) -> np.ndarray:
    """Unordered distinct pairs (x < y) with M(x, y, t) > 1 - r."""
    close = space.closeness(r, t)
    return np.argwhere(np.triu(close, 1))


def ratio_check(sets, pairs, eps: float, tol: Tolerance):
    """Worst |Δ|/|∩| over pairs and the margin-certified verdict.

    ``sets`` is a WitnessFamily (counts come from its cached table) or a
    plain sequence of frozensets.
    """
    count = sets.counts if isinstance(sets, WitnessFamily) else (lambda x, y: set_counts(sets[x], sets[y]))
    worst, where, ok, boundary = 0.0, None, True, False
    for x, y in pairs:
        inter, sym = count(x, y)
        ratio = sym / inter if inter else math.inf
        if ratio > worst or where is None:
            worst, where = max(worst, ratio), (int(x), int(y))
        if not certify_lt(sym, eps * inter, tol.margin):
            ok = False
            boundary = boundary or (inter > 0 and sym <= eps * inter)
    return worst, where, ok, boundary


def verify_witness(space: FuzzySpace, w: WitnessFamily, p: ParamTuple, tol: Tolerance = DEFAULT_TOL) -> WitnessCertificate:
    failures = _structural_failures(space, w)
    if failures:
        return WitnessCertificate(p, False, None, space.t_max, math.inf, None, 0, failures)
    r_prime, t_prime = support_window(space, w, tol)
    pairs = close_pairs(space, p.r, p.t)
    worst, where, ok, boundary = ratio_check(w, pairs, p.eps, tol)
    if not 0.0 < r_prime < 1.0:
        ok = False
        failures.append("support window degenerates (r' outside (0, 1))")
    if where is not None and not ok:
        x, y = where
        failures.append(f"ratio {worst:.6g} at ({space.labels[x]}, {space.labels[y]}) is not below eps={p.eps}")
    return WitnessCertificate(p, ok, r_prime, t_prime, worst if len(pairs) else 0.0,
                              where, len(pairs), failures, boundary)


def verify_metric_witness(d, w: WitnessFamily, eps: float, R: float, tol: Tolerance = DEFAULT_TOL) -> WitnessCertificate:
    """Metric-space Property A check: the ε-inequality on pairs with d(x, y) < R.

    The support window is reported as (S, 0) with S just above the largest
    distance from x to proj(A_x).
    """
    d = np.asarray(d, dtype=float)
    p = ParamTuple(eps, 0.5, float(R))
    pairs = np.argwhere(np.triu(d < R, 1))
    worst, where, ok, boundary = ratio_check(w, pairs, eps, tol)
    reach = max((d[x, y] for x, a in enumerate(w.sets) for y, _ in a), default=0.0)
    return WitnessCertificate(p, ok, None, float(np.nextafter(reach, np.inf)), worst if len(pairs) else 0.0,
                              where, len(pairs), [] if ok else ["metric ratio check failed"], boundary)


def metric_to_fuzzy_params(eps: float, r: float, t: float) -> tuple:
    """(ε, R) on the metric side from fuzzy (ε, r, t): R = tr/(1 - r)."""
    return eps, t * r / (1.0 - r)


def fuzzy_to_metric_params(eps: float, R: float) -> ParamTuple:
    """Fuzzy (ε, r, t) that covers metric radius R: r = 1/2, t = R."""
    return ParamTuple(eps, 0.5, float(R))


# -- nat-product example -------------------------------------------------------


def ex39_level(r: float) -> int:
    """Least N >= 1 with 1/(N+1) < 1 - r, computed in exact arithmetic."""
    gap = 1 - Fraction(repr(float(check_radius(r))))
    n = max(1, math.floor(1 / gap))
    while Fraction(1, n + 1) >= gap:
        n += 1
    while n > 1 and Fraction(1, n) < gap:
        n -= 1
    return n


@dataclass
class Ex39Result:
    witness: WitnessFamily
    N: int
    representative: int  # point index standing in for N
    support_r: float
    support_ok: bool
    clamped: bool


def ex39_witness(space: FuzzySpace, r: float) -> Ex39Result:
    """A_n = {(N, 1)} for n <= N, else {(n, 1)} on the nat-product space.

    On a truncation {1..n} with N > n the representative is clamped to n; the
    close pairs still share one set.
    """
    if space.builtin is None or space.builtin[0] != "nat-product":
        raise DomainError("ex39_witness needs the nat-product builtin space")
    N = ex39_level(r)
    rep = min(N, space.n)  # point value; index is value - 1
    sets = [frozenset({(rep - 1, 1)}) if v <= rep else frozenset({(v - 1, 1)}) for v in range(1, space.n + 1)]
    w = WitnessFamily(tuple(sets))
    support_r = 1.0 - 1.0 / (rep * rep)
    m = space.matrix(space.t_max)
    support_ok = all(m[x, y] > 1.0 - support_r or x == y for x, a in enumerate(w.sets) for y, _ in a) \
        if rep > 1 else True
    return Ex39Result(w, N, rep - 1, support_r, bool(support_ok), rep < N)


# -- chains and the cover construction -----------------------------------------


def chain_lengths(space: FuzzySpace, U, r: float, t: float, K: int) -> np.ndarray:
    """l_U(x) for every point: hop count to leave U in the (r, t)-closeness graph, capped at K.

    Entries for points outside U are 0.
    """
    if K < 1:
        raise DomainError("cap K must be >= 1")
    r, t = check_radius(r), check_time(t)
    adj = space.closeness(r, t)
    inside = np.zeros(space.n, dtype=bool)
    inside[space.idxs(U)] = True
    dist = np.full(space.n, K, dtype=np.int64)
    dist[~inside] = 0
    frontier = ~inside
    seen = ~inside
    for step in range(1, K):
        if not frontier.any():
            break
        reach = adj[frontier].any(axis=0) & ~seen
        dist[reach] = step
        seen = seen | reach
        frontier = reach
    return dist


def chain_length(space: FuzzySpace, x, U, r: float, t: float, K: int) -> int:
    """Length of the shortest (r, t)-chain from x to a point outside U, capped at K."""
    x = space.idx(x)
    if x not in set(space.idxs(U)):
        raise DomainError("x must lie in U")
    return int(chain_lengths(space, U, r, t, K)[x])


def cover_level(eps: float, n: int) -> int:
    """K = floor(2 + (2n + 1)/eps), exact for the decimal value of eps."""
    if n < 0:
        raise DomainError("n must be >= 0")
    e = Fraction(repr(float(eps)))
    if e <= 0:
        raise DomainError("eps must be positive")
    return math.floor(2 + (2 * n + 1) / e)


@dataclass
class CoverRequirements:
    K: int
    threshold: float  # 1 - R = (1 - r)^{*(K+1)}
    T: float
    underflow: bool

    @property
    def R(self) -> float:
        return 1.0 - self.threshold


def cover_requirements(space: FuzzySpace, p: ParamTuple, n: int) -> CoverRequirements:
    K = cover_level(p.eps, n)
    thr = float(space.tnorm.power(1.0 - p.r, K + 1))
    T = (2 + (2 * n + 1) / p.eps) * p.t
    return CoverRequirements(K, thr, T, thr == 0.0)


@dataclass
class ConstructionReport:
    requirements: CoverRequirements
    anchors: list
    certificate: WitnessCertificate
    max_projection: int
    max_sym_diff: int
    bounded: object
    notes: list = field(default_factory=list)
    n_plus_one: int = 1

    @property
    def passed(self) -> bool:
        return (self.certificate.passed and self.max_projection <= self.n_plus_one
                and self.max_sym_diff <= 2 * self.n_plus_one - 1)


def construct_from_cover(space: FuzzySpace, cover: Cover, p: ParamTuple, n: int,
                         tol: Tolerance = DEFAULT_TOL) -> tuple:
    """The chain-length witness A_x = ⋃_{U ∋ x} {a_U} × {1..l_U(x)}.

    The cover's multiplicity and Lebesgue pair are checked first; a failed
    claim raises :class:`CertificateError` naming it.
    """
    req = cover_requirements(space, p, n)
    if not cover.covers(space.n):
        raise CertificateError("cover does not cover the space", claim="cover")
    mult = multiplicity(cover, space.n)
    if mult > n + 1:
        raise CertificateError(f"multiplicity {mult} exceeds n + 1 = {n + 1}", claim="multiplicity")
    leb = lebesgue_check_threshold(space, cover, req.threshold, req.T)
    if not leb.passed:
        bad = space.labels[leb.failures[0]]
        raise CertificateError(f"Lebesgue pair fails: the required ball at {bad} lies in no member",
                               claim="lebesgue")
    anchors = cover.anchors()
    heights = np.zeros((space.n, space.n), dtype=np.int64)
    for U, a in zip(cover.sets, anchors):
        lengths = chain_lengths(space, U, p.r, p.t, req.K)
        for x in U:
            heights[x, a] += lengths[x]
    w = WitnessFamily.from_heights(heights)
    cert = verify_witness(space, w, p, tol)
    proj = max(len(w.projection(x)) for x in range(space.n))
    sym = 0
    for x, y in close_pairs(space, p.r, p.t):
        sym = max(sym, w.counts(x, y)[1])
    notes = []
    if req.underflow:
        notes.append("(1 - r)^{*(K+1)} underflows to 0; the required balls are the whole space")
    report = ConstructionReport(req, anchors, cert, proj, sym, uniform_bound(space, cover.sets), notes,
                                n_plus_one=n + 1)
    return w, report


# -- the subexponential construction ------------------------------------------


@dataclass
class SubexpField:
    n: int
    r: float
    vectors: np.ndarray  # (points, points), row x is eta^n_x
    representatives: list
    support_ok: bool
    multiplicity: int


def subexp_bound(mult: int, t: int, n: int) -> float:
    return 2.0 * (1.0 - mult ** (-2.0 * t / n))


def subexp_field(space: FuzzySpace, cover: Cover, r: float, n: int) -> SubexpField:
    """eta^n_x = J((1/n) sum_{k=n+1}^{2n} xi_{S_x(r, k)}) with S_x(r, k) = {i : B(x, r, k) ⊆ U_i}.

    J sends member i to its smallest-index point.
    """
    r = check_radius(r)
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n = int(n)
    mem = cover.membership(space.n)
    outside = (~mem).astype(np.int64)
    reps = cover.anchors()
    zeta = np.zeros((space.n, len(cover.sets)))
    for k in range(n + 1, 2 * n + 1):
        balls = space.closeness(r, float(k)).astype(np.int64)
        contains = (balls @ outside.T) == 0  # (points, members)
        sizes = contains.sum(axis=1)
        if np.any(sizes == 0):
            x = int(np.argmin(sizes))
            raise DomainError(f"S_x(r, k) is empty at x={space.labels[x]}, k={k}")
        zeta += contains / sizes[:, None]
    zeta /= n
    eta = np.zeros((space.n, space.n))
    for i, rep in enumerate(reps):
        eta[:, rep] += zeta[:, i]
    bw = uniform_bound(space, cover.sets)
    window = space.matrix(bw.t) > 1.0 - bw.r
    support_ok = bool(np.all(window[eta > 0]))
    return SubexpField(n, r, eta, reps, support_ok, multiplicity(cover, space.n))


def heights_map(space: FuzzySpace, heights: Mapping) -> WitnessFamily:
    """Witness from {x_label: {y_label: h}}."""
    h = np.zeros((space.n, space.n), dtype=np.int64)
    for x, row in heights.items():
        for y, v in row.items():
            h[space.idx(x), space.idx(y)] = int(v)
    return WitnessFamily.from_heights(h)


@dataclass
class SubexpCheck:
    n: int
    t: float
    bound: float
    worst: float
    slack: float  # bound - worst
    pairs: int
    passed: bool


def subexp_check(space: FuzzySpace, f: SubexpField, t: float) -> SubexpCheck:
    """||eta_x - eta_y||_1 against 2(1 - mult^{-2t/n}) on pairs with M(x, y, t) > 1 - r."""
    pairs = close_pairs(space, f.r, check_time(t))
    if len(pairs):
        dist = np.abs(f.vectors[pairs[:, 0]] - f.vectors[pairs[:, 1]]).sum(axis=1)
        worst = float(dist.max())
    else:
        worst = 0.0
    bound = subexp_bound(f.multiplicity, t, f.n)
    return SubexpCheck(f.n, float(t), bound, worst, bound - worst, len(pairs), worst <= bound + 1e-12)
