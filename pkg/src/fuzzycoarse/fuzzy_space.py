"""Finite fuzzy metric spaces (George-Veeramani), their axioms, balls and
local-finiteness profiles.

Points are addressed by integer index everywhere in the library; labels are
only used at the I/O boundary. Any function taking a point also accepts its
string label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError
from .numerics import DEFAULT_TOL, TNorm, Tolerance

DEFAULT_T_GRID = np.logspace(-3, 3, 61)


@dataclass(frozen=True)
class PointSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            raise DomainError("point labels must be distinct")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise DomainError(f"unknown point {label!r}") from None


# -- metrics -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StandardMetric:
    """M(x, y, t) = t / (t + d(x, y)) for a metric d."""

    d: np.ndarray
    kind = "standard"
    is_stationary = False

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        _check_square(d, "distance matrix")
        if np.any(d != d.T):
            raise DomainError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise DomainError("distance matrix needs a zero diagonal")
        off = d[~np.eye(len(d), dtype=bool)]
        if off.size and (not np.all(np.isfinite(off)) or off.min() <= 0):
            raise DomainError("distinct points need a positive finite distance")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.d)

    def matrix(self, t: float) -> np.ndarray:
        return t / (t + self.d)


@dataclass(frozen=True, eq=False)
class StationaryMetric:
    """M(x, y, t) = V(x, y), independent of t."""

    values: np.ndarray
    kind = "stationary"
    is_stationary = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        _check_square(v, "value matrix")
        if np.any(v != v.T):
            raise DomainError("value matrix is not symmetric")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    def matrix(self, t: float) -> np.ndarray:
        return self.values


@dataclass(frozen=True, eq=False)
class SampledMetric:
    """Per-pair samples on a t grid, linearly interpolated, constant outside."""

    t_grid: np.ndarray
    values: np.ndarray  # shape (n, n, len(t_grid))
    kind = "sampled"
    is_stationary = False

    def __post_init__(self):
        grid = np.array(self.t_grid, dtype=float)
        vals = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise DomainError("t_grid must be strictly increasing positive reals")
        if vals.ndim != 3 or vals.shape[0] != vals.shape[1] or vals.shape[2] != grid.size:
            raise DomainError(f"sampled values need shape (n, n, {grid.size}), got {vals.shape}")
        if np.any(vals != np.swapaxes(vals, 0, 1)):
            raise DomainError("sampled values are not symmetric")
        grid.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "t_grid", grid)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def matrix(self, t: float) -> np.ndarray:
        grid = self.t_grid
        if t <= grid[0]:
            return self.values[:, :, 0]
        if t >= grid[-1]:
            return self.values[:, :, -1]
        k = int(np.searchsorted(grid, t, side="right")) - 1
        w = (t - grid[k]) / (grid[k + 1] - grid[k])
        return (1.0 - w) * self.values[:, :, k] + w * self.values[:, :, k + 1]


def _check_square(a: np.ndarray, what: str):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{what} must be square, got shape {a.shape}")


# -- the space ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FuzzySpace:
    """A finite fuzzy metric space (X, M, *).

    Construction checks the structural invariants (sizes, symmetry, values in
    (0, 1], M = 1 on the diagonal) and rejects t-norms with zero divisors.
    The analytic axioms are checked separately by :func:`verify_axioms`.
    """

    points: PointSet
    tnorm: TNorm
    metric: StandardMetric | StationaryMetric | SampledMetric
    name: str = ""
    t_grid: np.ndarray = field(default_factory=lambda: DEFAULT_T_GRID.copy())
    builtin: tuple | None = None

    def __post_init__(self):
        tn = TNorm.parse(self.tnorm)
        if tn.has_zero_divisors:
            raise DomainError(f"t-norm {tn.value!r} has zero divisors; bounded sets would not form a coarse structure")
        object.__setattr__(self, "tnorm", tn)
        if not isinstance(self.points, PointSet):
            object.__setattr__(self, "points", PointSet(tuple(self.points)))
        if self.metric.n != len(self.points):
            raise DomainError(f"metric has {self.metric.n} points but {len(self.points)} labels were given")
        grid = np.array(self.t_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
            raise DomainError("verification grid must be nonempty positive reals")
        grid = np.unique(grid)
        grid.setflags(write=False)
        object.__setattr__(self, "t_grid", grid)
        object.__setattr__(self, "_cache", {})
        for t in (grid[0], grid[-1]):
            m = self.matrix(t)
            if np.any(~np.isfinite(m)) or np.any(m <= 0) or np.any(m > 1):
                raise DomainError("fuzzy metric values must lie in (0, 1]")
            if np.any(np.diag(m) != 1.0):
                raise DomainError("M(x, x, t) must equal 1")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> tuple:
        return self.points.labels

    @property
    def t_max(self) -> float:
        return float(self.t_grid[-1])

    def idx(self, x) -> int:
        """Resolve a point given as index or label."""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if not 0 <= x < self.n:
                raise DomainError(f"point index {x} out of range")
            return int(x)
        return self.points.index(x)

    def idxs(self, xs: Iterable) -> list[int]:
        return [self.idx(x) for x in xs]

    def matrix(self, t: float) -> np.ndarray:
        """The full n x n matrix of M(., ., t) (read-only, cached)."""
        t = float(t)
        if not t > 0:
            raise DomainError(f"t must be positive, got {t}")
        cache = self._cache
        m = cache.get(t)
        if m is None:
            m = np.array(self.metric.matrix(t), dtype=float)
            m.setflags(write=False)
            if len(cache) > 512:
                cache.clear()
            cache[t] = m
        return m

    def M(self, x, y, t: float) -> float:
        return float(self.matrix(t)[self.idx(x), self.idx(y)])

    def closeness(self, r: float, t: float) -> np.ndarray:
        """Boolean matrix of the relation M(x, y, t) > 1 - r."""
        return self.matrix(t) > 1.0 - r

    def subspace(self, indices: Sequence[int], name: str | None = None) -> "FuzzySpace":
        idx = np.asarray(sorted(set(self.idxs(indices))), dtype=int)
        if idx.size == 0:
            raise DomainError("subspace must be nonempty")
        labels = tuple(self.labels[i] for i in idx)
        metric = self.metric
        if isinstance(metric, StandardMetric):
            sub = StandardMetric(metric.d[np.ix_(idx, idx)])
        elif isinstance(metric, StationaryMetric):
            sub = StationaryMetric(metric.values[np.ix_(idx, idx)])
        else:
            sub = SampledMetric(metric.t_grid, metric.values[np.ix_(idx, idx)])
        return FuzzySpace(PointSet(labels), self.tnorm, sub, name or f"{self.name}|sub", self.t_grid)


def check_radius(r: float) -> float:
    r = float(r)
    if not 0.0 < r < 1.0:
        raise DomainError(f"r must lie in (0, 1), got {r}")
    return r


def check_time(t: float) -> float:
    t = float(t)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t must be a positive real, got {t}")
    return t


# -- constructors ------------------------------------------------------------


def standard_space(d, labels=None, tnorm="product", name="", t_grid=None) -> FuzzySpace:
    d = np.asarray(d, dtype=float)
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(d)))
    return FuzzySpace(PointSet(labels), TNorm.parse(tnorm), StandardMetric(d), name,
                      DEFAULT_T_GRID if t_grid is None else t_grid)


def stationary_space(values, labels=None, tnorm="product", name="", t_grid=None) -> FuzzySpace:
    v = np.asarray(values, dtype=float)
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(v)))
    return FuzzySpace(PointSet(labels), TNorm.parse(tnorm), StationaryMetric(v), name,
                      DEFAULT_T_GRID if t_grid is None else t_grid)


def sampled_space(t_grid, values, labels=None, tnorm="product", name="", verify_grid=None) -> FuzzySpace:
    metric = SampledMetric(t_grid, values)
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(metric.n))
    return FuzzySpace(PointSet(labels), TNorm.parse(tnorm), metric, name,
                      DEFAULT_T_GRID if verify_grid is None else verify_grid)


BUILTINS = ("nat-ratio", "nat-product", "path", "grid-z")


def builtin_space(kind: str, n: int) -> FuzzySpace:
    """The finite truncations shipped with the library.

    ``nat-ratio``: {1..n}, M = min/max. ``nat-product``: {1..n}, M = 1/(xy)
    off the diagonal. ``path``: {0..n-1} with |i - j|, standard. ``grid-z``:
    the n x n block of Z^2 with the l1 metric, standard.
    """
    n = int(n)
    if n < 1:
        raise DomainError("builtin spaces need n >= 1")
    if kind == "nat-ratio":
        x = np.arange(1, n + 1, dtype=float)
        v = np.minimum.outer(x, x) / np.maximum.outer(x, x)
        return FuzzySpace(PointSet([str(i) for i in range(1, n + 1)]), TNorm.PRODUCT,
                          StationaryMetric(v), f"nat-ratio-{n}", builtin=(kind, n))
    if kind == "nat-product":
        x = np.arange(1, n + 1, dtype=float)
        v = 1.0 / np.outer(x, x)
        np.fill_diagonal(v, 1.0)
        return FuzzySpace(PointSet([str(i) for i in range(1, n + 1)]), TNorm.PRODUCT,
                          StationaryMetric(v), f"nat-product-{n}", builtin=(kind, n))
    if kind == "path":
        x = np.arange(n, dtype=float)
        d = np.abs(np.subtract.outer(x, x))
        return FuzzySpace(PointSet([str(i) for i in range(n)]), TNorm.PRODUCT,
                          StandardMetric(d), f"path-{n}", builtin=(kind, n))
    if kind == "grid-z":
        ij = np.array([(i, j) for i in range(n) for j in range(n)], dtype=float)
        d = np.abs(ij[:, None, :] - ij[None, :, :]).sum(axis=2)
        labels = [f"{i}_{j}" for i in range(n) for j in range(n)]
        return FuzzySpace(PointSet(labels), TNorm.PRODUCT, StandardMetric(d), f"grid-z-{n}",
                          builtin=(kind, n))
    raise DomainError(f"unknown builtin {kind!r}; expected one of {BUILTINS}")


def random_metric(n: int, rng: np.random.Generator, dim: int = 2, scale: float = 10.0) -> np.ndarray:
    """Euclidean distances between n random points (a genuine metric)."""
    pts = rng.uniform(0.0, scale, size=(n, dim))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


def random_stationary_values(n: int, rng: np.random.Generator, decay: float | None = None) -> np.ndarray:
    """V = exp(-decay * d) for a random metric d; satisfies the product-triangle law."""
    d = random_metric(n, rng)
    decay = rng.uniform(0.05, 0.5) if decay is None else decay
    v = np.exp(-decay * d)
    np.fill_diagonal(v, 1.0)
    return v


# -- evaluation, axioms ------------------------------------------------------


def eval_M(space: FuzzySpace, x, y, t: float) -> float:
    return space.M(x, y, check_time(t))


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    worst: float = 0.0
    witness: dict | None = None
    boundary: bool = False


@dataclass
class AxiomReport:
    checks: list[AxiomCheck]
    t_grid: list[float]
    s_grid: list[float]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _triangle_check(space: FuzzySpace, t_grid, s_grid, tol: Tolerance) -> AxiomCheck:
    n = space.n
    tn = space.tnorm
    if space.metric.is_stationary:
        # M does not depend on t, so every (t, s) gives the same inequality
        t_grid, s_grid = t_grid[:1], s_grid[:1]
    ms = np.stack([space.matrix(s) for s in s_grid])
    chunk = max(1, int(4_000_000 // max(n ** 3, 1)))
    worst, where = -np.inf, None
    for t in t_grid:
        a = space.matrix(t)
        for lo in range(0, len(s_grid), chunk):
            ss = s_grid[lo:lo + chunk]
            lhs = tn(a[None, :, :, None], ms[lo:lo + chunk, None, :, :])  # (s, x, y, z)
            ymax = lhs.max(axis=2)
            rhs = np.stack([space.matrix(t + s) for s in ss])  # (s, x, z)
            viol = ymax - rhs
            k = int(np.argmax(viol))
            val = float(viol.flat[k])
            if val > worst:
                si, x, z = np.unravel_index(k, viol.shape)
                y = int(np.argmax(lhs[si, x, :, z]))
                worst = val
                where = dict(x=space.labels[x], y=space.labels[y], z=space.labels[int(z)],
                             t=float(t), s=float(ss[si]),
                             lhs=float(lhs[si, x, y, z]), rhs=float(rhs[si, x, z]))
    passed = worst <= tol.tau
    return AxiomCheck("triangle", passed, max(worst, 0.0), None if passed else where)


def verify_axioms(space: FuzzySpace, t_grid=None, s_grid=None, tol: Tolerance = DEFAULT_TOL) -> AxiomReport:
    """Brute-force check of the fuzzy metric axioms over points^3 x grids.

    Violations are report content; nothing is raised.
    """
    t_grid = np.unique(np.asarray(space.t_grid if t_grid is None else t_grid, dtype=float))
    s_grid = t_grid if s_grid is None else np.unique(np.asarray(s_grid, dtype=float))
    if np.any(t_grid <= 0) or np.any(s_grid <= 0):
        raise DomainError("grids must be positive")
    n = space.n
    labels = space.labels
    mats = np.stack([space.matrix(t) for t in t_grid])
    off = ~np.eye(n, dtype=bool)
    checks = []

    k = int(np.argmin(mats))
    lowest = float(mats.flat[k])
    ti, x, y = np.unravel_index(k, mats.shape)
    checks.append(AxiomCheck("positivity", lowest > 0, lowest,
                             None if lowest > 0 else dict(x=labels[x], y=labels[y], t=float(t_grid[ti]))))

    diag_err = float(np.max(np.abs(np.diagonal(mats, axis1=1, axis2=2) - 1.0)))
    offmax = float(mats[:, off].max()) if n > 1 else 0.0
    ident_ok = diag_err <= tol.tau and offmax < 1.0 - tol.margin
    witness = None
    if not ident_ok and n > 1:
        flat = np.where(off[None], mats, -np.inf)
        k = int(np.argmax(flat))
        ti, x, y = np.unravel_index(k, mats.shape)
        witness = dict(x=labels[x], y=labels[y], t=float(t_grid[ti]), value=float(mats[ti, x, y]))
    checks.append(AxiomCheck("identity", ident_ok, max(diag_err, offmax - (1.0 - tol.margin), 0.0), witness,
                             boundary=(not ident_ok and offmax <= 1.0)))

    asym = float(np.max(np.abs(mats - np.swapaxes(mats, 1, 2))))
    checks.append(AxiomCheck("symmetry", asym == 0.0, asym))

    checks.append(_triangle_check(space, t_grid, s_grid, tol))

    if len(t_grid) > 1:
        drops = mats[:-1] - mats[1:]
        k = int(np.argmax(drops))
        worst = float(drops.flat[k])
        ok = worst <= tol.tau
        ti, x, y = np.unravel_index(k, drops.shape)
        checks.append(AxiomCheck("monotone", ok, max(worst, 0.0), None if ok else
                                 dict(x=labels[x], y=labels[y], t=float(t_grid[ti]), t_next=float(t_grid[ti + 1]))))
    else:
        checks.append(AxiomCheck("monotone", True))

    notes = []
    if isinstance(space.metric, SampledMetric):
        vals = space.metric.values
        ok = bool(np.all(np.isfinite(vals)) and np.all(vals > 0) and np.all(vals <= 1))
        checks.append(AxiomCheck("continuity", ok))
        notes.append("sampled metric: piecewise-linear on its grid, constant extension outside it")
    if space.metric.is_stationary:
        notes.append("stationary metric: triangle law checked once, it is independent of (t, s)")
    return AxiomReport(checks, [float(t) for t in t_grid], [float(s) for s in s_grid], notes)


# -- balls, boundedness, local finiteness ------------------------------------

BOUNDARY_ULPS = 8


def ball(space: FuzzySpace, x, r: float, t: float) -> frozenset:
    """B(x, r, t) = {y : M(x, y, t) > 1 - r} as a set of point indices.

    r usually arrives as a decimal literal, so 1 - r carries rounding from
    the float parse; values within a few ulps of the threshold count as on
    the boundary and are excluded (e.g. M = 1/10 at r = 0.9).
    """
    r, t = check_radius(r), check_time(t)
    row = space.matrix(t)[space.idx(x)]
    thr = 1.0 - r
    return frozenset(np.flatnonzero(row > thr + BOUNDARY_ULPS * np.finfo(float).eps * thr).tolist())


def ball_mask(space: FuzzySpace, threshold: float, t: float) -> np.ndarray:
    """Rows are the balls {y : M(x, y, t) > threshold}.

    Takes the threshold 1 - r directly so callers can pass values that
    underflow to 0 (every M is positive, so the ball is then everything).
    """
    return space.matrix(check_time(t)) > threshold


def metric_ball(d, x: int, R: float) -> frozenset:
    d = np.asarray(d, dtype=float)
    return frozenset(np.flatnonzero(d[x] < R).tolist())


def ball_correspondence_check(d, R: float, t: float, r: float) -> bool:
    """True iff B_d(x, R) = B(x, R/(t+R), t) = B(x, r, R(1-r)/r) for every x."""
    d = np.asarray(d, dtype=float)
    R, t, r = float(R), check_time(t), check_radius(r)
    if not R > 0:
        raise DomainError("R must be positive")
    space = standard_space(d)
    t2 = R * (1.0 - r) / r
    for x in range(len(d)):
        b = metric_ball(d, x, R)
        if b != ball(space, x, R / (t + R), t) or b != ball(space, x, r, t2):
            return False
    return True


@dataclass(frozen=True)
class BoundedWitness:
    """(r, t) with M(x, y, t) > 1 - r on every pair of some set of pairs."""

    r: float
    t: float

    def holds(self, space: FuzzySpace, pairs) -> bool:
        pairs = np.asarray(list(pairs), dtype=int).reshape(-1, 2)
        if pairs.size == 0:
            return True
        m = space.matrix(self.t)
        return bool(np.all(m[pairs[:, 0], pairs[:, 1]] > 1.0 - self.r))


def witness_for_min(min_m: float, t: float) -> BoundedWitness:
    """The witness 1 - r = min/2 used for every finite boundedness claim."""
    return BoundedWitness(1.0 - min_m / 2.0, t)


def is_bounded_set(space: FuzzySpace, A: Iterable) -> BoundedWitness:
    """Finite sets are always bounded; returns the witness at the grid max."""
    idx = np.asarray(space.idxs(A), dtype=int)
    t = space.t_max
    if idx.size == 0:
        return witness_for_min(1.0, t)
    lowest = float(space.matrix(t)[np.ix_(idx, idx)].min())
    return witness_for_min(lowest, t)


@dataclass(frozen=True)
class UlfProfile:
    entries: tuple  # ((r, t), N) with N = 1 + max ball size

    def N(self, r: float, t: float) -> int:
        for (rr, tt), n in self.entries:
            if rr == r and tt == t:
                return n
        raise KeyError((r, t))


def ulf_bound(space: FuzzySpace, threshold: float, t: float) -> int:
    """1 + max_x |{y : M(x, y, t) > threshold}| (the strict bound N)."""
    return 1 + int(ball_mask(space, threshold, t).sum(axis=1).max())


def ulf_profile(space: FuzzySpace, ladder: Sequence[tuple]) -> UlfProfile:
    ladder = list(ladder)
    if not ladder:
        raise DomainError("ladder must be nonempty")
    entries = []
    for r, t in ladder:
        r, t = check_radius(r), check_time(t)
        entries.append(((r, t), ulf_bound(space, 1.0 - r, t)))
    return UlfProfile(tuple(entries))


@dataclass(frozen=True)
class Window:
    """A propagation/support window stored as (threshold, t) with threshold = 1 - R.

    Keeping the threshold itself avoids R rounding to 1.0 when 1 - R is tiny.
    """

    threshold: float
    t: float

    def __post_init__(self):
        if not 0.0 <= self.threshold < 1.0:
            raise DomainError(f"window threshold must lie in [0, 1), got {self.threshold}")
        check_time(self.t)

    @classmethod
    def from_r(cls, r: float, t: float) -> "Window":
        return cls(1.0 - check_radius(r), t)

    @property
    def r(self) -> float:
        return 1.0 - self.threshold

    def ball(self, space: FuzzySpace) -> np.ndarray:
        """Rows are B(x, R, T) = {M(x, ., T) > 1 - R}."""
        return ball_mask(space, self.threshold, self.t)

    def allowed(self, space: FuzzySpace) -> np.ndarray:
        """Entries an operator with this window may be nonzero on (M >= 1 - R)."""
        return space.matrix(self.t) >= self.threshold
