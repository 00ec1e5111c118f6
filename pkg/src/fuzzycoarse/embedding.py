"""Unit vectors from witness families and the block embedding
F(x) = (xi^n_x - xi^n_z)_{n=1..N} into truncated coordinate Hilbert space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .covers_asdim import Cover
from .exceptions import CertificateError, DomainError
from .fuzzy_space import FuzzySpace, Window
from .numerics import DEFAULT_TOL, Tolerance
from .property_a import ParamTuple, WitnessFamily, close_pairs, construct_from_cover, verify_witness

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class AceField:
    """xi_x = |A_x|^{-1/2} chi_{A_x}; column y * L + (level - 1)."""

    vectors: sparse.csr_matrix
    levels: int  # L, the largest level used
    sizes: np.ndarray  # |A_x|
    window: Window
    eps: float

    def gram(self) -> np.ndarray:
        return (self.vectors @ self.vectors.T).toarray()

    def sq_dist(self) -> np.ndarray:
        g = self.gram()
        d = np.diag(g)
        return np.maximum(d[:, None] + d[None, :] - 2.0 * g, 0.0)


def _indicator(w: WitnessFamily, n: int) -> tuple:
    """Indicator rows of the A_x padded to n points, and the level count L."""
    chi = w.indicator
    L = w.levels
    if chi.shape[1] < n * L:
        chi = sparse.hstack([chi, sparse.csr_matrix((chi.shape[0], n * L - chi.shape[1]))]).tocsr()
    return chi, L


def ace_vectors(space: FuzzySpace, w: WitnessFamily, p: ParamTuple, tol: Tolerance = DEFAULT_TOL) -> AceField:
    """Unit vectors at eps from a witness verified at (eps^2, r, t).

    On close pairs <xi_x, xi_y> > 2 / (2 + eps^2), so ||xi_x - xi_y||^2 < eps^2.
    """
    cert = verify_witness(space, w, ParamTuple(p.eps ** 2, p.r, p.t), tol)
    if not cert.passed:
        raise CertificateError("witness does not verify at (eps^2, r, t): " + "; ".join(cert.failures),
                               claim="witness")
    chi, L = _indicator(w, space.n)
    sizes = np.asarray(chi.sum(axis=1)).ravel()
    xi = sparse.diags(1.0 / np.sqrt(sizes)) @ chi
    field_ = AceField(xi.tocsr(), L, sizes.astype(np.int64), Window(1.0 - cert.support_r, cert.support_t), p.eps)
    pairs = close_pairs(space, p.r, p.t)
    e2 = p.eps ** 2
    g = field_.gram()
    for x, y in pairs:
        inter, _ = w.counts(x, y)
        if not sizes[x] + sizes[y] < (2.0 + e2) * inter:
            raise CertificateError(f"size inequality fails at ({x}, {y})", claim="ace")
        if not g[x, y] > 2.0 / (2.0 + e2) - tol.tau:
            raise CertificateError(f"inner product bound fails at ({x}, {y})", claim="ace")
    return field_


# -- the embedding ----------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingConfig:
    N: int = 6
    radii: tuple | None = None  # r_n; default n / (n + 1)
    times: tuple | None = None  # t_n; default n
    base: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        r = self.r
        if len(r) != self.N or len(self.t) != self.N:
            raise DomainError("ladder length must equal N")
        if any(not 0 < v < 1 for v in r) or any(b <= a for a, b in zip(r, r[1:])):
            raise DomainError("r_n must be strictly increasing in (0, 1)")
        if any(v <= 0 for v in self.t):
            raise DomainError("t_n must be positive")

    @property
    def r(self) -> tuple:
        return tuple(self.radii) if self.radii is not None else tuple(n / (n + 1) for n in range(1, self.N + 1))

    @property
    def t(self) -> tuple:
        return tuple(self.times) if self.times is not None else tuple(float(n) for n in range(1, self.N + 1))

    def eps(self, n: int) -> float:
        return 2.0 ** -n

    def level(self, n: int) -> ParamTuple:
        """Parameters (eps_n, r_n, t_n) of level n >= 1."""
        return ParamTuple(self.eps(n), self.r[n - 1], self.t[n - 1])

    def witness_params(self, n: int) -> ParamTuple:
        """Level-n witnesses are verified at eps_n^2."""
        p = self.level(n)
        return ParamTuple(p.eps ** 2, p.r, p.t)


def level_witnesses(space: FuzzySpace, cover: Cover, cfg: EmbeddingConfig, dim: int = 1,
                    tol: Tolerance = DEFAULT_TOL) -> list:
    """One cover-built witness per level at (eps_n^2, r_n, t_n)."""
    out = []
    for n in range(1, cfg.N + 1):
        w, rep = construct_from_cover(space, cover, cfg.witness_params(n), dim, tol)
        if not rep.passed:
            raise CertificateError(f"level {n} witness does not verify", claim="witness")
        out.append(w)
    return out


@dataclass
class Diagnostics:
    sqrt2_vs_disjoint: list  # pairs/levels where distance sqrt 2 and A-disjointness disagree
    condition_exceptions: list  # disjointness condition holds but distance is not sqrt 2
    condition_hits: int
    n_double_prime: np.ndarray
    bound_b_violations: list
    sqrt2_count: np.ndarray
    bound_c: dict  # R -> (pairs within R, max count, violations)
    orthogonality_gap: float
    tail: float  # sum_{n > N} 2^{-n}, the truncated part of the distance

    @property
    def passed(self) -> bool:
        return (not self.sqrt2_vs_disjoint and not self.condition_exceptions and not self.bound_b_violations
                and all(not v[2] for v in self.bound_c.values()) and self.orthogonality_gap <= 1e-9)


@dataclass
class EmbeddingVectors:
    space: FuzzySpace
    cfg: EmbeddingConfig
    F: sparse.csr_matrix
    fields: list  # AceField per level
    block_sq: np.ndarray  # (n, n, N) squared block distances
    sq: np.ndarray  # ||F(x) - F(y)||^2 from the assembled vectors
    windows: list
    diagnostics: Diagnostics
    notes: list = field(default_factory=list)

    @property
    def base(self) -> int:
        return self.cfg.base

    @property
    def dist(self) -> np.ndarray:
        return np.sqrt(self.sq)

    def blocks(self, x: int, y: int) -> np.ndarray:
        return np.sqrt(self.block_sq[x, y])


def _is_sqrt2(sq: np.ndarray) -> np.ndarray:
    return np.abs(sq - 2.0) <= 1e-12


def build_embedding(space: FuzzySpace, witnesses: Sequence[WitnessFamily], cfg: EmbeddingConfig | None = None,
                    tol: Tolerance = DEFAULT_TOL) -> EmbeddingVectors:
    cfg = cfg or EmbeddingConfig()
    if len(witnesses) < cfg.N:
        raise DomainError(f"need {cfg.N} level witnesses, got {len(witnesses)}")
    z = space.idx(cfg.base)
    n = space.n
    fields, blocks, block_sq, windows = [], [], [], []
    for lv in range(1, cfg.N + 1):
        w = witnesses[lv - 1]
        f = ace_vectors(space, w, cfg.level(lv), tol)
        fields.append(f)
        windows.append(f.window)
        xi = f.vectors
        blocks.append(xi - sparse.csr_matrix(np.ones((n, 1))) @ xi[z])
        block_sq.append(f.sq_dist())
    F = sparse.hstack(blocks).tocsr()
    g = (F @ F.T).toarray()
    d = np.diag(g)
    sq = np.maximum(d[:, None] + d[None, :] - 2.0 * g, 0.0)
    block_sq = np.stack(block_sq, axis=2)
    gap = float(np.max(np.abs(sq - block_sq.sum(axis=2))))

    # (a) sqrt 2 exactly for disjoint sets; the support condition forces disjointness
    mismatch, cond_exc, hits = [], [], 0
    for lv, (w, win) in enumerate(zip(witnesses, windows), start=1):
        disjoint = w.intersections == 0
        s2 = _is_sqrt2(block_sq[:, :, lv - 1])
        for x, y in np.argwhere(np.triu(disjoint != s2, 1)):
            mismatch.append((int(x), int(y), lv))
        cond = space.matrix(2.0 * win.t) < float(space.tnorm(win.threshold, win.threshold))
        hits += int(np.triu(cond, 1).sum())
        for x, y in np.argwhere(np.triu(cond & ~s2, 1)):
            cond_exc.append((int(x), int(y), lv))

    # (b) N'' = largest level at which the pair is not (r_n, t_n)-close
    npp = np.zeros((n, n), dtype=np.int64)
    for lv in range(1, cfg.N + 1):
        far = ~space.closeness(cfg.r[lv - 1], cfg.t[lv - 1])
        npp[far] = lv
    b_viol = [(int(x), int(y)) for x, y in np.argwhere(np.triu(~(sq < 4 * npp + 1), 1))]

    # (c) the number of sqrt 2 blocks is at most R^2 / 2 once ||F(x) - F(y)|| <= R
    count = _is_sqrt2(block_sq).sum(axis=2)
    dist = np.sqrt(sq)
    bound_c = {}
    for R in (1, 2, 3):
        within = np.triu(dist <= R, 1)
        viol = [(int(x), int(y)) for x, y in np.argwhere(within & (count > R * R / 2))]
        bound_c[R] = (int(within.sum()), int(count[within].max()) if within.any() else 0, viol)

    diag = Diagnostics(mismatch, cond_exc, hits, npp, b_viol, count, bound_c, gap, 2.0 ** -cfg.N)
    notes = [f"truncated at N={cfg.N}; the omitted tail adds at most {2.0 ** -cfg.N:.3g} to each distance"]
    return EmbeddingVectors(space, cfg, F, fields, block_sq, sq, windows, diag, notes)


def build_from_cover(space: FuzzySpace, cover: Cover, cfg: EmbeddingConfig | None = None, dim: int = 1,
                     tol: Tolerance = DEFAULT_TOL) -> EmbeddingVectors:
    cfg = cfg or EmbeddingConfig()
    return build_embedding(space, level_witnesses(space, cover, cfg, dim, tol), cfg, tol)


# -- distortion ---------------------------------------------------------------------


@dataclass
class DistortionReport:
    rows: list  # (x, y, M at the largest grid time, distance)
    expansive: list  # (level, close pairs, worst block distance, bound 2^-n, ok)
    proper: list  # (R, pairs within R, max sqrt2 count, R^2/2, ok)
    monotone_violations: list  # from the base point: farther in M, nearer in F
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r[-1] for r in self.expansive) and all(r[-1] for r in self.proper)


def distortion_report(E: EmbeddingVectors) -> DistortionReport:
    space, cfg = E.space, E.cfg
    n = space.n
    m = space.matrix(space.t_max)
    dist = E.dist
    rows = [(x, y, float(m[x, y]), float(dist[x, y])) for x in range(n) for y in range(x, n)]
    expansive = []
    for lv in range(1, cfg.N + 1):
        close = np.triu(space.closeness(cfg.r[lv - 1], cfg.t[lv - 1]), 1)
        bd = np.sqrt(E.block_sq[:, :, lv - 1])[close]
        worst = float(bd.max()) if bd.size else 0.0
        expansive.append((lv, int(close.sum()), worst, cfg.eps(lv), worst <= cfg.eps(lv)))
    proper = []
    for R, (k, mx, viol) in E.diagnostics.bound_c.items():
        proper.append((R, k, mx, R * R / 2, not viol))
    z = E.base
    order = np.argsort(-m[z], kind="stable")
    mono = []
    for i, y1 in enumerate(order):
        for y2 in order[i + 1:]:
            if m[z, y1] > m[z, y2] and dist[z, y1] > dist[z, y2] + 1e-12:
                mono.append((int(y1), int(y2)))
    notes = [f"M column is taken at t={space.t_max:g}, a lower bound for the supremum over all t"]
    return DistortionReport(rows, expansive, proper, mono, notes)
