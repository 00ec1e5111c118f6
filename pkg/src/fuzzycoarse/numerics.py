"""Continuous t-norms, the comparison tolerance policy, and a small dense
symmetric linear-algebra kernel (cyclic Jacobi, PSD square roots, power
iteration)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import ConvergenceError, DomainError, NotPSDError


class TNorm(enum.Enum):
    PRODUCT = "product"
    MINIMUM = "minimum"
    LUKASIEWICZ = "lukasiewicz"

    @classmethod
    def parse(cls, value) -> "TNorm":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown t-norm {value!r}") from None

    @property
    def has_zero_divisors(self) -> bool:
        # decided by kind: a*b = 0 with a, b > 0 only happens for lukasiewicz
        return self is TNorm.LUKASIEWICZ

    def __call__(self, a, b):
        """Vectorised a*b without domain checks."""
        if self is TNorm.PRODUCT:
            return np.multiply(a, b)
        if self is TNorm.MINIMUM:
            return np.minimum(a, b)
        return np.maximum(np.add(a, b) - 1.0, 0.0)

    def power(self, a, m: int):
        """m-fold iterate a*a*...*a (vectorised, no domain checks)."""
        if m < 1:
            raise DomainError(f"power exponent must be >= 1, got {m}")
        if self is TNorm.MINIMUM:
            return np.asarray(a, dtype=float) + 0.0
        if self is TNorm.LUKASIEWICZ:
            return np.maximum(m * np.asarray(a, dtype=float) - (m - 1), 0.0)
        # square-and-multiply keeps large exponents cheap; product is associative
        result = np.ones_like(np.asarray(a, dtype=float))
        base = np.asarray(a, dtype=float)
        while m:
            if m & 1:
                result = result * base
            base = base * base
            m >>= 1
        return result


@dataclass(frozen=True)
class Tolerance:
    """Equality tolerance ``tau`` and the strict-inequality ``margin``."""

    tau: float = 1e-9
    margin: float = 1e-12

    def __post_init__(self):
        if not (self.tau >= self.margin >= 0):
            raise DomainError(f"need tau >= margin >= 0, got tau={self.tau}, margin={self.margin}")


DEFAULT_TOL = Tolerance()


def _check_unit(name: str, value: float, tol: Tolerance) -> float:
    value = float(value)
    if not (-tol.tau <= value <= 1.0 + tol.tau):
        raise DomainError(f"{name}={value} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def tnorm_apply(tn: TNorm, a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    tn = TNorm.parse(tn)
    a = _check_unit("a", a, tol)
    b = _check_unit("b", b, tol)
    return float(tn(a, b))


def tnorm_power(tn: TNorm, a: float, m: int, tol: Tolerance = DEFAULT_TOL) -> float:
    tn = TNorm.parse(tn)
    a = _check_unit("a", a, tol)
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    return float(tn.power(a, int(m)))


def certify_lt(lhs: float, rhs: float, margin: float) -> bool:
    """True iff ``lhs < rhs`` holds with at least ``margin`` to spare."""
    return bool(lhs < rhs and (rhs - lhs) >= margin)


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A real symmetric matrix whose rows and columns are labelled by points.

    Only the upper triangle of the input is kept; the lower one is mirrored
    so that ``entries[i, j] == entries[j, i]`` holds bit for bit.
    """

    entries: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if a.size and np.max(np.abs(a - a.T)) > 1e-9 * scale:
            raise DomainError("matrix is not symmetric")
        upper = np.triu(a)
        a = upper + np.triu(upper, 1).T
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(a.shape[0]))
        if len(labels) != a.shape[0]:
            raise DomainError("label count does not match matrix size")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def as_array(A) -> np.ndarray:
    if isinstance(A, SymMatrix):
        return A.entries
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    return a


class Eigh(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    sweeps: int


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple:
    """Disjoint (p, q) index pairs per round covering every pair once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def sym_eig(A, tol: Tolerance = DEFAULT_TOL, max_sweeps: int = 60) -> Eigh:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rotations within one round act on disjoint coordinate planes, so a whole
    round is applied as a single orthogonal similarity. Eigenvalues come back
    sorted in descending order with matching eigenvector columns.
    """
    a = np.array(as_array(A), dtype=float)
    n = a.shape[0]
    if n and np.max(np.abs(a - a.T)) > tol.tau * max(1.0, float(np.max(np.abs(a)))):
        raise DomainError("sym_eig requires a symmetric matrix")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n <= 1:
        return Eigh(np.diag(a).copy(), v, 0)

    fro = float(np.linalg.norm(a))
    target = 1e-15 * fro
    sweeps = 0
    off = _off_norm(a)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})",
                residual=off,
            )
        for p, q in _round_robin(n):
            apq = a[p, q]
            active = np.abs(apq) > 1e-150 * max(fro, 1e-150)
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            sgn = np.where(theta >= 0, 1.0, -1.0)
            t = sgn / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            j = np.eye(n)
            j[p, p] = c
            j[q, q] = c
            j[p, q] = s
            j[q, p] = -s
            a = j.T @ a @ j
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ j
        sweeps += 1
        new_off = _off_norm(a)
        if new_off >= off and new_off <= 1e-12 * fro:
            # rounding floor reached
            break
        off = new_off

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return Eigh(values[order], v[:, order], sweeps)


def spectral_norm_sym(A) -> float:
    values = sym_eig(A).values
    return float(np.max(np.abs(values))) if values.size else 0.0


def psd_sqrt(A, tol: Tolerance = DEFAULT_TOL, psd_rtol: float = 1e-8) -> np.ndarray:
    """The positive square root of a PSD matrix.

    Eigenvalues in ``[-psd_rtol * ||A||, 0)`` are clamped to zero; anything
    more negative raises :class:`NotPSDError`.
    """
    eig = sym_eig(A, tol)
    values = eig.values
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    lowest = float(values.min()) if values.size else 0.0
    if lowest < -psd_rtol * scale:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {lowest:.3e})", min_eigenvalue=lowest)
    root = np.sqrt(np.clip(values, 0.0, None))
    b = (eig.vectors * root) @ eig.vectors.T
    return (b + b.T) / 2.0


def row_sum_bound(A) -> float:
    a = as_array(A)
    return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0


def op_norm_upper(A, max_iter: int = 200_000, rtol: float = 1e-13, seed: int = 0) -> float:
    """Spectral norm estimate of a symmetric matrix by power iteration on A².

    The Rayleigh value is inflated by the final residual and capped by the
    max-row-sum bound, which is a true upper bound for symmetric matrices.
    """
    a = as_array(A)
    n = a.shape[0]
    cap = row_sum_bound(a)
    if n == 0 or cap == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = np.ones(n) + 1e-3 * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma2, res = 0.0, np.inf
    for _ in range(max_iter):
        w = a @ v
        sigma2 = float(w @ w)
        u = a @ w
        res = float(np.linalg.norm(u - sigma2 * v))
        if res <= rtol * max(sigma2, 1e-300):
            break
        norm_u = float(np.linalg.norm(u))
        if norm_u == 0.0:
            # start vector fell into the null space of a nonzero matrix
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        v = u / norm_u
    return float(min(cap, np.sqrt(sigma2 + res)))


def gram(vectors: Sequence) -> np.ndarray:
    m = np.asarray(vectors, dtype=float)
    g = m @ m.T
    return (g + g.T) / 2.0
