"""Entourages over a finite set, the bounded coarse structure induced by a
fuzzy metric, and coarse-space versions of Property A, asymptotic
dimension and coarse maps, with cross-checks against the fuzzy-level
verifiers.

On a finite space every subset of X x X is bounded, so every report here
carries a ``finite_trivial`` note; the content lies in the per-(r, t)
comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .coarse_maps import PointMap, check_uniformly_expansive
from .covers_asdim import DisjointFamilies, verify_asdim_witness
from .exceptions import DomainError
from .fuzzy_space import BoundedWitness, FuzzySpace, check_radius, check_time, witness_for_min
from .numerics import DEFAULT_TOL, Tolerance
from .property_a import ParamTuple, WitnessFamily, ratio_check, verify_witness

FINITE_NOTE = "finite space: every subset of X x X lies in the bounded coarse structure"


@dataclass(frozen=True)
class Entourage:
    pairs: frozenset
    params: tuple | None = None  # optional (r, t) hint for bounded_witness

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(a), int(b)) for a, b in self.pairs))

    @classmethod
    def of(cls, space: FuzzySpace, pairs: Iterable) -> "Entourage":
        return cls(frozenset((space.idx(a), space.idx(b)) for a, b in pairs))

    @classmethod
    def diagonal(cls, n: int) -> "Entourage":
        return cls(frozenset((i, i) for i in range(n)))

    @classmethod
    def closeness(cls, space: FuzzySpace, r: float, t: float) -> "Entourage":
        """E_{r,t} = {(x, y) : M(x, y, t) > 1 - r}."""
        r, t = check_radius(r), check_time(t)
        idx = np.argwhere(space.closeness(r, t))
        return cls(frozenset(map(tuple, idx.tolist())), (r, t))

    @classmethod
    def from_matrix(cls, mask: np.ndarray) -> "Entourage":
        return cls(frozenset(map(tuple, np.argwhere(mask).tolist())))

    def matrix(self, n: int) -> np.ndarray:
        mask = np.zeros((n, n), dtype=bool)
        if self.pairs:
            a = np.array(sorted(self.pairs))
            mask[a[:, 0], a[:, 1]] = True
        return mask

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs


def entourage_inverse(E: Entourage) -> Entourage:
    return Entourage(frozenset((b, a) for a, b in E.pairs))


def entourage_compose(E1: Entourage, E2: Entourage) -> Entourage:
    """{(x, y) : exists z with (x, z) in E1 and (z, y) in E2}."""
    pts = {p for pair in E1.pairs | E2.pairs for p in pair}
    n = 1 + max(pts) if pts else 0
    prod = E1.matrix(n).astype(np.int64) @ E2.matrix(n).astype(np.int64)
    return Entourage.from_matrix(prod > 0)


def entourage_union(E1: Entourage, E2: Entourage) -> Entourage:
    return Entourage(E1.pairs | E2.pairs)


def _min_over(space: FuzzySpace, pairs, t: float) -> float:
    if not pairs:
        return 1.0
    a = np.array(sorted(pairs))
    return float(space.matrix(t)[a[:, 0], a[:, 1]].min())


def bounded_witness(space: FuzzySpace, E: Entourage) -> BoundedWitness:
    """(r, t) with M(x, y, t) > 1 - r on E.

    Uses the entourage's own (r, t) hint when it verifies; otherwise t is the
    grid max and 1 - r is half the min of M over E.
    """
    if not E.pairs:
        raise DomainError("entourage must be nonempty")
    if E.params is not None:
        hint = BoundedWitness(*E.params)
        if hint.holds(space, E.pairs):
            return hint
    t = space.t_max
    return witness_for_min(_min_over(space, E.pairs, t), t)


def compose_witness(space: FuzzySpace, w1: BoundedWitness, w2: BoundedWitness) -> BoundedWitness:
    """Witness for E1 ∘ E2: time t1 + t2 and 1 - r = (1 - r1) * (1 - r2)."""
    return BoundedWitness(1.0 - float(space.tnorm(1.0 - w1.r, 1.0 - w2.r)), w1.t + w2.t)


def union_witness(w1: BoundedWitness, w2: BoundedWitness) -> BoundedWitness:
    return BoundedWitness(max(w1.r, w2.r), max(w1.t, w2.t))


# -- Property A on the coarse space ----------------------------------------------


@dataclass
class SakoCertificate:
    passed: bool
    eps: float
    F: Entourage | None
    F_witness: BoundedWitness | None
    worst_ratio: float
    worst_pair: tuple | None
    pairs_checked: int
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=lambda: [FINITE_NOTE])


def sako_property_a_verify(space: FuzzySpace, E: Entourage, w: WitnessFamily, eps: float,
                           tol: Tolerance = DEFAULT_TOL) -> SakoCertificate:
    """Check |A_x Δ A_y| < eps |A_x ∩ A_y| on E, with A ⊂ F × N for a bounded F."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    failures = []
    if len(w) != space.n:
        failures.append(f"witness has {len(w)} sets for {space.n} points")
    else:
        failures += [f"A_{space.labels[x]} is empty" for x, a in enumerate(w.sets) if not a]
    if failures:
        return SakoCertificate(False, eps, None, None, math.inf, None, 0, failures)
    F = Entourage(frozenset((x, y) for x, a in enumerate(w.sets) for y, _ in a))
    Fw = bounded_witness(space, F)
    if not Fw.holds(space, F.pairs):
        failures.append("support entourage F has no bounded witness")
    pairs = sorted(E.pairs)
    worst, where, ok, _ = ratio_check(w, pairs, eps, tol)
    if not ok:
        failures.append(f"ratio {worst:.6g} on an E-pair is not below eps={eps}")
    return SakoCertificate(ok and not failures, eps, F, Fw, worst if pairs else 0.0, where, len(pairs), failures)


# -- asymptotic dimension ----------------------------------------------------------


@dataclass
class CoarseAsdimReport:
    passed: bool
    n: int
    covering: bool
    offending: list  # (family, member_i, member_j, pair)
    bounded: BoundedWitness | None
    notes: list = field(default_factory=lambda: [FINITE_NOTE])


def coarse_asdim_verify(space: FuzzySpace, E: Entourage, families: Sequence) -> CoarseAsdimReport:
    """Each family E-disjoint, union uniformly bounded; n = number of families - 1."""
    fams = [[sorted(space.idxs(s)) for s in fam] for fam in families]
    emat = E.matrix(space.n) if E.pairs else np.zeros((space.n, space.n), dtype=bool)
    if E.pairs and max(max(p) for p in E.pairs) >= space.n:
        raise DomainError("entourage refers to unknown points")
    emat = emat | emat.T  # (D_i x D_j) and (D_j x D_i) both count
    offending = []
    for k, fam in enumerate(fams):
        for i in range(len(fam)):
            for j in range(i + 1, len(fam)):
                hit = np.argwhere(emat[np.ix_(fam[i], fam[j])])
                if hit.size:
                    a, b = hit[0]
                    offending.append((k, i, j, (fam[i][a], fam[j][b])))
    covered = np.zeros(space.n, dtype=bool)
    square = set()
    for fam in fams:
        for s in fam:
            covered[s] = True
            square.update((a, b) for a in s for b in s)
    bounded = bounded_witness(space, Entourage(frozenset(square))) if square else None
    cov = bool(covered.all())
    return CoarseAsdimReport(cov and not offending, len(fams) - 1, cov, offending, bounded)


# -- coarse maps -------------------------------------------------------------------


@dataclass
class CoarseMapReport:
    bornologous: bool
    proper: bool
    image_witnesses: list
    preimage_witnesses: list
    crosscheck: list  # (r, t, bornologous, expansive)
    agrees: bool
    notes: list = field(default_factory=lambda: [FINITE_NOTE])

    @property
    def passed(self) -> bool:
        return self.bornologous and self.proper


def coarse_map_check(f: PointMap, entourages: Sequence[Entourage], bounded_sets: Sequence,
                     ladder: Sequence[tuple] | None = None) -> CoarseMapReport:
    """Bornologous and proper over finite ledgers, cross-checked against the
    fuzzy-level expansiveness table on E_{r,t} rungs."""
    img = []
    for E in entourages:
        pushed = Entourage(frozenset((f.images[a], f.images[b]) for a, b in E.pairs))
        wit = bounded_witness(f.target, pushed) if pushed.pairs else None
        img.append(wit is None or wit.holds(f.target, pushed.pairs))
    pre = []
    for B in bounded_sets:
        B = set(f.target.idxs(B))
        back = [x for x, y in enumerate(f.images) if y in B]
        square = Entourage(frozenset((a, b) for a in back for b in back))
        wit = bounded_witness(f.source, square) if back else None
        pre.append(wit is None or wit.holds(f.source, square.pairs))
    ladder = ladder or [(r, t) for r in (0.1, 0.5, 0.9) for t in (1.0, 10.0)]
    cross = []
    for r, t in ladder:
        E = Entourage.closeness(f.source, r, t)
        pushed = Entourage(frozenset((f.images[a], f.images[b]) for a, b in E.pairs))
        born = bounded_witness(f.target, pushed).holds(f.target, pushed.pairs)
        table = check_uniformly_expansive(f, [1.0 - r], [t])
        cross.append((r, t, born, table.passed))
    return CoarseMapReport(all(img), all(pre), img, pre, cross, all(b == e for _, _, b, e in cross))


# -- fuzzy vs coarse cross-checks ----------------------------------------------------


@dataclass
class CrossCheck:
    fuzzy: bool
    coarse: bool
    boundary: bool = False

    @property
    def agrees(self) -> bool:
        return self.fuzzy == self.coarse


def crosscheck_property_a(space: FuzzySpace, w: WitnessFamily, p: ParamTuple,
                          tol: Tolerance = DEFAULT_TOL) -> CrossCheck:
    fuzzy = verify_witness(space, w, p, tol)
    coarse = sako_property_a_verify(space, Entourage.closeness(space, p.r, p.t), w, p.eps, tol)
    return CrossCheck(fuzzy.passed, coarse.passed, fuzzy.boundary)


def crosscheck_asdim(space: FuzzySpace, fams: DisjointFamilies, tol: Tolerance = DEFAULT_TOL) -> CrossCheck:
    """(r, t)-disjoint families versus E_{r,t}-disjoint families.

    The two differ only when some cross-member M equals 1 - r to within the
    margin; such instances are flagged ``boundary``.
    """
    fuzzy = verify_asdim_witness(space, fams, tol)
    coarse = coarse_asdim_verify(space, Entourage.closeness(space, fams.r, fams.t), fams.families)
    boundary = any(res.boundary for res in fuzzy.families)
    return CrossCheck(fuzzy.passed, coarse.passed, boundary)
