"""Covers, (r, t)-disjoint families, multiplicity, Lebesgue pairs and the
minimal-multiplicity estimator ad_X.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError
from .fuzzy_space import (BoundedWitness, FuzzySpace, ball_mask, check_radius, check_time,
                          witness_for_min)
from .numerics import DEFAULT_TOL, Tolerance, certify_lt


def _as_members(space: FuzzySpace, sets: Iterable) -> tuple:
    members = []
    for s in sets:
        m = frozenset(space.idxs(s))
        if not m:
            raise DomainError("cover members must be nonempty")
        members.append(m)
    return tuple(members)


@dataclass(frozen=True)
class Cover:
    """A family of point-index sets, with optional claims to re-verify."""

    sets: tuple
    claims: dict = field(default_factory=dict)

    def __post_init__(self):
        seen, unique = set(), []
        for s in self.sets:
            s = frozenset(int(i) for i in s)
            if not s:
                raise DomainError("cover members must be nonempty")
            if s in seen:
                warnings.warn("duplicate cover member dropped", stacklevel=3)
                continue
            seen.add(s)
            unique.append(s)
        object.__setattr__(self, "sets", tuple(unique))

    @classmethod
    def of(cls, space: FuzzySpace, sets: Iterable, claims: dict | None = None) -> "Cover":
        return cls(_as_members(space, sets), dict(claims or {}))

    def __len__(self):
        return len(self.sets)

    def membership(self, n: int) -> np.ndarray:
        """Boolean (members x points) incidence matrix."""
        mem = np.zeros((len(self.sets), n), dtype=bool)
        for j, s in enumerate(self.sets):
            mem[j, sorted(s)] = True
        return mem

    def covers(self, n: int) -> bool:
        return bool(self.membership(n).any(axis=0).all()) if self.sets else n == 0

    def anchors(self) -> list[int]:
        """Smallest point index of each member (the fixed tie-break)."""
        return [min(s) for s in self.sets]

    def key(self) -> tuple:
        return tuple(sorted(tuple(sorted(s)) for s in self.sets))


# -- disjointness, multiplicity, Lebesgue ------------------------------------


@dataclass
class DisjointnessCheck:
    passed: bool
    sup: float
    boundary: bool
    pair: tuple | None = None


def rt_disjointness(space: FuzzySpace, U, V, r: float, t: float, tol: Tolerance = DEFAULT_TOL) -> DisjointnessCheck:
    r, t = check_radius(r), check_time(t)
    u, v = space.idxs(U), space.idxs(V)
    if not u or not v:
        raise DomainError("sets must be nonempty")
    block = space.matrix(t)[np.ix_(u, v)]
    k = int(np.argmax(block))
    sup = float(block.flat[k])
    ok = certify_lt(sup, 1.0 - r, tol.margin)
    i, j = np.unravel_index(k, block.shape)
    return DisjointnessCheck(ok, sup, (not ok) and sup <= 1.0 - r, (u[i], v[j]))


def are_rt_disjoint(space: FuzzySpace, U, V, r: float, t: float, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff max M(u, v, t) over U x V is below 1 - r (certified with margin)."""
    return rt_disjointness(space, U, V, r, t, tol).passed


def multiplicity(cover: Cover, n: int | None = None) -> int:
    """Max number of members containing one point; pass n to require coverage."""
    if not cover.sets:
        return 0
    size = n if n is not None else 1 + max(max(s) for s in cover.sets)
    mem = cover.membership(size)
    counts = mem.sum(axis=0)
    if n is not None and np.any(counts == 0):
        raise DomainError(f"not a cover: point {int(np.argmin(counts))} is uncovered")
    return int(counts.max())


@dataclass
class LebesgueReport:
    passed: bool
    containing: list  # member index per point, or None
    failures: list

    def __bool__(self):
        return self.passed


def lebesgue_check_threshold(space: FuzzySpace, cover: Cover, threshold: float, t: float) -> LebesgueReport:
    """Lebesgue test for the balls {y : M(x, y, t) > threshold}."""
    balls = ball_mask(space, threshold, t).astype(np.int64)
    outside = (~cover.membership(space.n)).astype(np.int64)
    inside = (balls @ outside.T) == 0  # (points, members)
    containing, failures = [], []
    for x in range(space.n):
        hits = np.flatnonzero(inside[x])
        if hits.size:
            containing.append(int(hits[0]))
        else:
            containing.append(None)
            failures.append(x)
    return LebesgueReport(not failures, containing, failures)


def lebesgue_pair_check(space: FuzzySpace, cover: Cover, r: float, t: float) -> LebesgueReport:
    """Every ball B(x, r, t) lies in one member; records that member per x."""
    r = check_radius(r)
    return lebesgue_check_threshold(space, cover, 1.0 - r, t)


def uniform_bound(space: FuzzySpace, sets: Iterable, t: float | None = None) -> BoundedWitness:
    """Witness (r, t) of uniform boundedness: 1 - r is half the min in-member M."""
    t = space.t_max if t is None else check_time(t)
    m = space.matrix(t)
    lowest = 1.0
    for s in sets:
        idx = sorted(s)
        lowest = min(lowest, float(m[np.ix_(idx, idx)].min()))
    return witness_for_min(lowest, t)


def within_bound(space: FuzzySpace, sets: Iterable, bound: tuple | None) -> bool:
    """True iff every member has all pairs with M(., ., t_b) > 1 - r_b."""
    if bound is None:
        return True
    rb, tb = bound
    m = space.matrix(check_time(tb))
    for s in sets:
        idx = sorted(s)
        if not np.all(m[np.ix_(idx, idx)] > 1.0 - rb):
            return False
    return True


# -- asymptotic-dimension witnesses ------------------------------------------


@dataclass(frozen=True)
class DisjointFamilies:
    families: tuple  # of tuples of frozensets
    r: float
    t: float

    def __post_init__(self):
        fams = tuple(tuple(frozenset(int(i) for i in s) for s in fam) for fam in self.families)
        object.__setattr__(self, "families", fams)
        check_radius(self.r)
        check_time(self.t)

    @classmethod
    def of(cls, space: FuzzySpace, families, r: float, t: float) -> "DisjointFamilies":
        return cls(tuple(_as_members(space, fam) for fam in families), r, t)

    @property
    def n(self) -> int:
        return len(self.families) - 1

    def members(self) -> list:
        return [s for fam in self.families for s in fam]


@dataclass
class FamilyResult:
    passed: bool
    worst_margin: float  # (1 - r) - largest cross-member M; positive is good
    offending: tuple | None = None
    boundary: bool = False


@dataclass
class AsdimReport:
    passed: bool
    n: int
    covering: bool
    families: list
    bounded: BoundedWitness | None
    uncovered: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def verify_asdim_witness(space: FuzzySpace, fams: DisjointFamilies, tol: Tolerance = DEFAULT_TOL) -> AsdimReport:
    m = space.matrix(fams.t)
    thr = 1.0 - fams.r
    results = []
    for fam in fams.families:
        worst, where, ok, boundary = np.inf, None, True, False
        sets = [sorted(s) for s in fam]
        for a in range(len(sets)):
            for b in range(a + 1, len(sets)):
                block = m[np.ix_(sets[a], sets[b])]
                k = int(np.argmax(block))
                sup = float(block.flat[k])
                gap = thr - sup
                if gap < worst:
                    i, j = np.unravel_index(k, block.shape)
                    worst, where = gap, (sets[a][i], sets[b][j])
                if not certify_lt(sup, thr, tol.margin):
                    ok = False
                    boundary = boundary or sup <= thr
        results.append(FamilyResult(ok, float(worst) if np.isfinite(worst) else float("inf"),
                                    None if ok else where, boundary))
    members = fams.members()
    covered = np.zeros(space.n, dtype=bool)
    for s in members:
        covered[sorted(s)] = True
    uncovered = np.flatnonzero(~covered).tolist()
    bounded = uniform_bound(space, members) if members else None
    passed = not uncovered and all(r.passed for r in results)
    return AsdimReport(passed, fams.n, not uncovered, results, bounded, uncovered,
                       ["uniform boundedness always holds on a finite space; the witness is recorded"])


def enlarge_family(space: FuzzySpace, family: Iterable, r: float, t: float) -> list:
    """Replace each U by the union of the balls B(x, r, t), x in U."""
    r = check_radius(r)
    balls = ball_mask(space, 1.0 - r, t)
    out = []
    for s in family:
        idx = space.idxs(s)
        out.append(frozenset(np.flatnonzero(balls[idx].any(axis=0)).tolist()))
    return out


# -- ad_X ----------------------------------------------------------------------


def hop_distances(adj: np.ndarray) -> np.ndarray:
    """All-pairs hop counts in an unweighted graph (inf when disconnected)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    return shortest_path(csr_matrix(adj.astype(np.int8)), unweighted=True, directed=False)


def _partition_cover(balls: np.ndarray, parts: Sequence[Sequence[int]]) -> Cover:
    sets = [frozenset(np.flatnonzero(balls[list(p)].any(axis=0)).tolist()) for p in parts]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Cover(tuple(dict.fromkeys(sets)))


def _cluster_partition(hops: np.ndarray, order: Sequence[int], radius: float) -> list:
    left = np.ones(len(order), dtype=bool)
    parts = []
    for seed in order:
        if not left[seed]:
            continue
        part = np.flatnonzero(left & (hops[seed] <= radius))
        left[part] = False
        parts.append(part.tolist())
    return parts


def _set_partitions(items: list):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for p in _set_partitions(rest):
        yield [[head]] + p
        for i in range(len(p)):
            yield p[:i] + [[head] + p[i]] + p[i + 1:]


def min_multiplicity_exhaustive(space: FuzzySpace, r: float, t: float, bound: tuple | None = None):
    """Exact min multiplicity over covers with Lebesgue pair (r, t), n <= 8.

    Any admissible cover can be shrunk to one whose members are unions of the
    balls assigned to them, so ranging over set partitions is exhaustive.
    """
    if space.n > 8:
        raise DomainError("exhaustive search is limited to 8 points")
    balls = ball_mask(space, 1.0 - check_radius(r), t)
    best = None
    for parts in _set_partitions(list(range(space.n))):
        cover = _partition_cover(balls, parts)
        if not within_bound(space, cover.sets, bound):
            continue
        mult = multiplicity(cover, space.n)
        cand = (mult, cover.key())
        if best is None or cand < best[0]:
            best = (cand, cover)
    return None if best is None else (best[0][0], best[1])


@dataclass
class AdxEntry:
    t: float
    estimate: int | None  # multiplicity - 1, an upper bound
    cover: Cover | None
    multiplicity: int | None


@dataclass
class AdxTable:
    r: float
    r_prime: float
    bound: tuple | None
    seed: int
    entries: list
    notes: list = field(default_factory=list)
    label: str = "HEURISTIC UPPER BOUND"


def adx_radius(space: FuzzySpace, r: float) -> float:
    """r' = 1 - (1/2)(1 - r)^{*2}."""
    return 1.0 - 0.5 * float(space.tnorm.power(1.0 - check_radius(r), 2))


def greedy_min_cover(space: FuzzySpace, r: float, t: float, bound: tuple | None = None,
                     seed: int = 0, n_orders: int = 8):
    """Greedy search over hop-cluster partitions, enlarged by (r, t) balls.

    Returns (multiplicity, cover) for the best admissible candidate, or None.
    Ties go to the lexicographically smallest cover.
    """
    r, t = check_radius(r), check_time(t)
    balls = ball_mask(space, 1.0 - r, t)
    hops = hop_distances(balls)
    finite = hops[np.isfinite(hops)]
    diam = int(finite.max()) if finite.size else 0
    rng = np.random.default_rng(seed)
    orders = [list(range(space.n))] + [rng.permutation(space.n).tolist() for _ in range(n_orders)]
    radii = list(range(diam + 1)) + [np.inf]
    best = None
    for radius in radii:
        for order in orders:
            cover = _partition_cover(balls, _cluster_partition(hops, order, radius))
            if not within_bound(space, cover.sets, bound):
                continue
            cand = (multiplicity(cover, space.n), cover.key())
            if best is None or cand < best[0]:
                best = (cand, cover)
    if bound is None:
        whole = Cover((frozenset(range(space.n)),))
        cand = (1, whole.key())
        if best is None or cand < best[0]:
            best = (cand, whole)
    return None if best is None else (best[0][0], best[1])


def ad_x_estimate(space: FuzzySpace, r: float, t_ladder: Sequence[float], bound: tuple | None = None,
                  seed: int = 0, n_orders: int = 8) -> AdxTable:
    """Upper bounds on ad_X(t) = min mult(U) - 1 over covers with L(U) >= (r', t).

    ``bound`` = (r_b, t_b) restricts members to sets with M(., ., t_b) > 1 - r_b;
    without it the one-member cover {X} is admissible and the estimate is 0.
    """
    t_ladder = [check_time(t) for t in t_ladder]
    if not t_ladder:
        raise DomainError("t ladder must be nonempty")
    rp = adx_radius(space, r)
    entries = []
    for t in t_ladder:
        found = greedy_min_cover(space, rp, t, bound, seed, n_orders)
        if found is None:
            entries.append(AdxEntry(t, None, None, None))
        else:
            mult, cover = found
            entries.append(AdxEntry(t, mult - 1, cover, mult))
    notes = ["Lebesgue pairs compared componentwise: the cover must pass at exactly (r', t)"]
    if bound is None:
        notes.append("no size bound: on a finite space {X} is admissible, so the estimate is trivially 0")
    return AdxTable(float(r), rp, bound, seed, entries, notes)
