"""The equivalent forms of Property A as executable transforms: witness ->
l1 field -> l2 field -> orthogonality window -> kernel -> operator -> l2
field -> witness.

Every transform re-checks its own inequality by direct recomputation and
returns a :class:`StepCertificate` next to its artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NotPSDError
from .fuzzy_space import FuzzySpace, Window, ulf_bound
from .numerics import (DEFAULT_TOL, SymMatrix, Tolerance, as_array, certify_lt, gram, op_norm_upper,
                       psd_sqrt, sym_eig)
from .property_a import (ParamTuple, WitnessFamily, close_pairs, support_window,
                         verify_witness)

PSD_RTOL = 1e-8
QUANT_BOUND = math.sqrt(5.0) - 2.0  # positive root of 1 - 4e - e^2


@dataclass(frozen=True, eq=False)
class L1Field:
    vectors: np.ndarray  # row x is eta_x
    window: Window

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def normalized(self) -> bool:
        return bool(np.allclose(np.abs(self.vectors).sum(axis=1), 1.0, rtol=0, atol=1e-9))


@dataclass(frozen=True, eq=False)
class L2Field:
    vectors: np.ndarray
    window: Window

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def normalized(self) -> bool:
        return bool(np.allclose(np.linalg.norm(self.vectors, axis=1), 1.0, rtol=0, atol=1e-9))


@dataclass(frozen=True, eq=False)
class Kernel:
    """Real kernel; an optional imaginary part is carried but never produced here."""

    matrix: SymMatrix
    window: Window
    imag: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class PropagatedOperator:
    """Matrix with entries <S delta_y, delta_x>, zero wherever M(x, y, t) < 1 - r."""

    matrix: np.ndarray
    window: Window

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass
class StepCertificate:
    step: str
    passed: bool
    eps: float | None  # the target bound for the step
    observed: float | None  # the measured quantity the bound is about
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def fail(self, name: str):
        self.checks[name] = False
        self.passed = False


def _cert(step, eps, observed, **checks) -> StepCertificate:
    return StepCertificate(step, all(checks.values()), eps, observed, dict(checks))


def support_ok(space: FuzzySpace, vectors: np.ndarray, window: Window) -> bool:
    return bool(np.all(window.ball(space)[vectors != 0]))


def _pair_norms(vectors: np.ndarray, pairs: np.ndarray, ord: int) -> np.ndarray:
    if len(pairs) == 0:
        return np.zeros(0)
    diff = vectors[pairs[:, 0]] - vectors[pairs[:, 1]]
    return np.abs(diff).sum(axis=1) if ord == 1 else np.linalg.norm(diff, axis=1)


def _max(a: np.ndarray) -> float:
    return float(a.max()) if a.size else 0.0


# (i) -> (ii)

def witness_to_l1(space: FuzzySpace, w: WitnessFamily, p: ParamTuple,
                  tol: Tolerance = DEFAULT_TOL) -> tuple:
    """eta_x = zeta_x / ||zeta_x||_1 with zeta_x(y) = |A_x(y)|.

    ``p`` holds the witness's parameters; the field is certified at 2 eps.
    """
    zeta = w.heights(space.n).astype(float)
    if np.any(zeta.sum(axis=1) == 0):
        raise DomainError("every A_x must be nonempty")
    eta = zeta / zeta.sum(axis=1, keepdims=True)
    r_prime, t_prime = support_window(space, w, tol)
    field_ = L1Field(eta, Window(1.0 - r_prime, t_prime))
    pairs = close_pairs(space, p.r, p.t)
    dists = _pair_norms(eta, pairs, 1)
    chain_ok = True
    for (x, y), dist in zip(pairs, dists):
        _, sym = w.counts(x, y)
        if dist > 2.0 * sym / max(len(w.sets[x]), len(w.sets[y])) + 1e-12:
            chain_ok = False
    obs = _max(dists)
    cert = _cert("i-ii", 2.0 * p.eps, obs,
                 witness=verify_witness(space, w, p, tol).passed,
                 unit_norm=field_.normalized,
                 proof_chain=chain_ok,
                 below_eps=certify_lt(obs, 2.0 * p.eps, tol.margin),
                 support=support_ok(space, eta, field_.window))
    return field_, cert


# (ii) -> (iii)

def l1_to_l2(space: FuzzySpace, xi: L1Field, p: ParamTuple, tol: Tolerance = DEFAULT_TOL) -> tuple:
    """eta_x(y) = sqrt(|xi_x(y)|); ``p.eps`` is the l2 target (input at eps^2)."""
    a = np.abs(xi.vectors)
    eta = np.sqrt(a)
    out = L2Field(eta, xi.window)
    n = space.n
    iu = np.argwhere(np.triu(np.ones((n, n), dtype=bool), 1))
    l2 = _pair_norms(eta, iu, 2)
    l1 = _pair_norms(a, iu, 1)
    pairs = close_pairs(space, p.r, p.t)
    obs = _max(_pair_norms(eta, pairs, 2))
    cert = _cert("ii-iii", p.eps, obs,
                 unit_norm=out.normalized,
                 sqrt_bound=bool(np.all(l2 <= np.sqrt(l1) + 1e-12)),
                 below_eps=certify_lt(obs, p.eps, tol.margin),
                 support=support_ok(space, eta, out.window))
    return out, cert


# (iii) -> (iv)

def orthogonality_window(space: FuzzySpace, eta: L2Field) -> tuple:
    """Window (1 - R') = (1 - R) * (1 - R) at 2T outside which <eta_x, eta_y> = 0."""
    thr = float(space.tnorm(eta.window.threshold, eta.window.threshold))
    win = Window(thr, 2.0 * eta.window.t)
    g = eta.vectors @ eta.vectors.T
    far = space.matrix(win.t) < win.threshold
    bad = int(np.count_nonzero(g[far]))
    cert = _cert("iii-iv", None, float(np.max(np.abs(g[far]))) if far.any() else 0.0,
                 support=support_ok(space, eta.vectors, eta.window),
                 orthogonal_outside=bad == 0)
    cert.details.update(far_pairs=int(far.sum()), nonzero_far=bad)
    return win, cert


# (iv) -> (v)

def l2_to_kernel(space: FuzzySpace, eta: L2Field, p: ParamTuple, tol: Tolerance = DEFAULT_TOL) -> tuple:
    """k(x, y) = Re <eta_x, eta_y>; ``p.eps`` bounds |1 - k| on close pairs."""
    win, wcert = orthogonality_window(space, eta)
    k = gram(eta.vectors)
    kern = Kernel(SymMatrix(k, space.labels), win)
    lowest = float(sym_eig(k).values.min())
    pairs = close_pairs(space, p.r, p.t)
    gap = np.abs(1.0 - k[pairs[:, 0], pairs[:, 1]]) if len(pairs) else np.zeros(0)
    half_sq = _pair_norms(eta.vectors, pairs, 2) ** 2 / 2.0
    cert = _cert("iv-v", p.eps, _max(gap),
                 psd=lowest >= -PSD_RTOL,
                 half_square_identity=bool(np.all(np.abs(gap - half_sq) <= 1e-12)),
                 below_eps=certify_lt(_max(gap), p.eps, tol.margin),
                 zero_outside=wcert.checks["orthogonal_outside"])
    cert.details["min_eigenvalue"] = lowest
    return kern, cert


def kernel_psd_check(k) -> bool:
    a = k.matrix.entries if isinstance(k, Kernel) else as_array(k)
    values = sym_eig(a).values
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return bool(values.size == 0 or values.min() >= -PSD_RTOL * scale)


# (v) -> (vi)

def kernel_to_operator(space: FuzzySpace, k: Kernel) -> tuple:
    """S_k = convolution with k; certifies positivity and ||S_k|| <= N_{R,T}."""
    a = np.array(k.matrix.entries if isinstance(k.matrix, SymMatrix) else k.matrix, dtype=float)
    values = sym_eig(a).values
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if values.size and values.min() < -PSD_RTOL * scale:
        raise NotPSDError("kernel is not positive definite", min_eigenvalue=float(values.min()))
    N = ulf_bound(space, k.window.threshold, k.window.t)
    norm = op_norm_upper(a)
    op = PropagatedOperator(a, k.window)
    cert = _cert("v-vi", float(N), norm,
                 positive=True,
                 norm_bound=norm <= N + 1e-6,
                 window=bool(np.all(a[~k.window.allowed(space)] == 0)))
    cert.details.update(N=N, op_norm=norm, slack=N - norm)
    return op, cert


@dataclass
class ComposeReport:
    window: Window
    verified: bool
    tightest: Window


def propagation_compose(space: FuzzySpace, S1: PropagatedOperator, S2: PropagatedOperator) -> ComposeReport:
    """Window (t1 + t2, (1 - r1) * (1 - r2)) of S1 S2, verified on the product."""
    thr = float(space.tnorm(S1.window.threshold, S2.window.threshold))
    win = Window(thr, S1.window.t + S2.window.t)
    prod = S1.matrix @ S2.matrix
    ok = bool(np.all(prod[space.matrix(win.t) < thr] == 0))
    return ComposeReport(win, ok, _tightest(space, prod, win.t))


def _tightest(space: FuzzySpace, a: np.ndarray, t: float) -> Window:
    """(threshold, t) with the threshold the smallest M(., ., t) on the support, capped below 1."""
    nz = a != 0
    if not nz.any():
        return Window(0.0, t)
    low = float(space.matrix(t)[nz].min())
    return Window(min(low, np.nextafter(1.0, 0.0)), t)


def tightest_window(space: FuzzySpace, S, t: float) -> Window:
    """Largest threshold at time t that the operator's support respects."""
    return _tightest(space, as_array(S.matrix if isinstance(S, PropagatedOperator) else S), t)


# (vi) -> (iii)

def _candidate_masks(space: FuzzySpace, times) -> list:
    seen, out = set(), []
    for t in times:
        m = space.matrix(t)
        for thr in np.unique(m):
            mask = m >= thr
            key = mask.tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append((int(mask.sum()), float(t), float(thr), mask))
    out.sort(key=lambda c: (c[0], c[1], c[2]))
    return out


def operator_to_l2(space: FuzzySpace, S: PropagatedOperator, eps: float, r: float, t: float,
                   tol: Tolerance = DEFAULT_TOL) -> tuple:
    """theta_x = row x of a finite-propagation truncation S_m of sqrt(S_k); eta = theta / ||theta||_2.

    Candidate windows run from tightest to loosest over the verification grid;
    the first with ||S_l - S_m|| < min(eps, eps / (2(||S_l|| + eps))) is used.
    """
    if not 0 < eps < 0.5:
        raise DomainError("operator_to_l2 needs 0 < eps < 1/2")
    k = S.matrix
    sl = psd_sqrt(k, tol, PSD_RTOL)
    sq_err = float(np.linalg.norm(sl @ sl - k, 2))
    sl_norm = float(np.max(np.abs(sym_eig(sl).values)))
    bound = min(eps, eps / (2.0 * (sl_norm + eps)))
    chosen, best = None, math.inf
    for _, tt, thr, mask in _candidate_masks(space, space.t_grid):
        dropped = np.where(mask, 0.0, sl)
        if float(np.linalg.norm(dropped, axis=0).max()) >= bound:
            continue  # a column norm is a lower bound on the operator norm
        err = op_norm_upper(dropped)
        best = min(best, err)
        if certify_lt(err, bound, tol.margin):
            chosen = (tt, thr, mask, err)
            break
    if chosen is None:
        raise DomainError(f"no truncation window meets the bound {bound:.3e} (best residual {best:.3e})")
    tt, thr, mask, err = chosen
    sm = np.where(mask, sl, 0.0)
    sm = (sm + sm.T) / 2.0
    theta = sm
    inner = theta @ theta.T
    norms2 = np.einsum("ij,ij->i", theta, theta)
    eta = theta / np.sqrt(norms2)[:, None]
    win = Window(min(thr * (1.0 - tol.margin), np.nextafter(1.0, 0.0)), tt)
    out = L2Field(eta, win)
    pairs = close_pairs(space, r, t)
    obs = _max(_pair_norms(eta, pairs, 2))
    final = 2.0 * math.sqrt(8.0 * eps / (1.0 - 2.0 * eps))
    kernel_gap = float(np.max(np.abs(inner - k)))
    cert = _cert("vi-iii", eps, obs,
                 sqrt_residual=sq_err <= 1e-8 * max(1.0, float(np.max(np.abs(sym_eig(k).values)))),
                 truncation=certify_lt(err, bound, tol.margin),
                 inner_products=certify_lt(kernel_gap, eps, tol.margin),
                 norms=bool(np.all(norms2 > 1.0 - 2.0 * eps)),
                 close_pairs=certify_lt(obs, final, tol.margin),
                 support=support_ok(space, eta, win))
    cert.details.update(sl_norm=sl_norm, truncation_bound=bound, truncation_error=err,
                        sqrt_residual=sq_err, kernel_gap=kernel_gap, final_bound=final,
                        window_t=tt, window_threshold=thr, kept_entries=int(mask.sum()))
    return out, cert


# (iii) -> (i)

def quantize(xi: np.ndarray, N: int) -> np.ndarray:
    """j with j - 1 < N xi <= j; values within 1e-9 of an integer are snapped."""
    scaled = N * xi
    near = np.rint(scaled)
    snap = np.abs(scaled - near) <= 1e-9 * max(1, N)
    return np.where(snap, near, np.ceil(scaled)).astype(np.int64)


def l2_to_witness(space: FuzzySpace, eta: L2Field, eps: float, r: float, t: float,
                  tol: Tolerance = DEFAULT_TOL) -> tuple:
    """Quantize xi = |eta|^2 at denominator N > N_{R,T}/eps into level sets.

    ``eps`` is the close-pair l2 bound of the input; the witness is certified
    at 8 eps / (1 - 4 eps - eps^2).
    """
    if not 0 < eps < QUANT_BOUND:
        raise DomainError(f"l2_to_witness needs 0 < eps < {QUANT_BOUND:.6f}")
    Nrt = ulf_bound(space, eta.window.threshold, eta.window.t)
    N = math.floor(Nrt / eps) + 1
    xi = eta.vectors ** 2
    heights = quantize(xi, N)
    w = WitnessFamily.from_heights(heights)
    target = 8.0 * eps / (1.0 - 4.0 * eps - eps * eps)
    wc = verify_witness(space, w, ParamTuple(target, r, t), tol)
    zeta = heights / N
    cert = _cert("iii-i", target, wc.worst_ratio,
                 input_bound=certify_lt(_max(_pair_norms(eta.vectors, close_pairs(space, r, t), 2)), eps, tol.margin),
                 quantization=bool(np.all(np.abs(zeta - xi).sum(axis=1) <= Nrt / N + 1e-12)),
                 sizes=bool(np.all(heights.sum(axis=1) == np.rint(N * zeta.sum(axis=1)))),
                 witness=wc.passed,
                 support=support_ok(space, heights.astype(float), eta.window))
    cert.details.update(N=N, N_RT=Nrt, certificate=wc)
    return w, cert


# -- the full round trip ---------------------------------------------------------


def _retarget(cert: StepCertificate, eps: float, tol: Tolerance):
    cert.eps = eps
    cert.checks["below_eps"] = certify_lt(cert.observed, eps, tol.margin)
    cert.passed = all(cert.checks.values())


def _track(formula: float, observed: float, floor: float) -> float:
    """Tightest justified bound: the proof's formula, or the measurement when that is smaller."""
    return min(formula, max(floor, observed * (1 + 1e-9) + 1e-15))


@dataclass
class RoundTrip:
    steps: list
    nominal: list  # (step, eps) from the proof's formulas alone
    tracked: list  # (step, eps) actually certified
    eps_final: float
    witness: WitnessFamily | None
    passed: bool
    nominal_closes: bool
    artifacts: dict = field(default_factory=dict)


def nominal_chain(eps: float) -> list:
    e1 = 2 * eps
    e2 = math.sqrt(e1)
    e4 = e2 * e2 / 2
    e6 = 2 * math.sqrt(8 * e4 / (1 - 2 * e4)) if e4 < 0.5 else math.inf
    final = 8 * e6 / (1 - 4 * e6 - e6 * e6) if e6 < QUANT_BOUND else math.inf
    return [("i-ii", e1), ("ii-iii", e2), ("iii-iv", e2), ("iv-v", e4), ("v-vi", e4),
            ("vi-iii", e6), ("iii-i", final)]


def roundtrip(space: FuzzySpace, w: WitnessFamily, p: ParamTuple, tol: Tolerance = DEFAULT_TOL) -> RoundTrip:
    """(i) -> (ii) -> (iii) -> (iv) -> (v) -> (vi) -> (iii) -> (i) from a witness verified at p.

    Two epsilon chains are reported. The nominal chain applies the proof's
    formulas to p.eps and only closes for small eps. The tracked chain uses,
    at each step, the smaller of the formula and the measured quantity
    (never below p.eps), which is what the step certificates check.
    """
    eps = p.eps
    steps, tracked, art = [], [], {}
    f1, c1 = witness_to_l1(space, w, p, tol)
    e1 = _track(2 * eps, c1.observed, eps)
    _retarget(c1, e1, tol)
    steps.append(c1)
    tracked.append(("i-ii", e1))

    f2, c2 = l1_to_l2(space, f1, ParamTuple(math.sqrt(e1), p.r, p.t), tol)
    e2 = _track(math.sqrt(e1), c2.observed, eps)
    _retarget(c2, e2, tol)
    steps.append(c2)
    tracked.append(("ii-iii", e2))

    _, c3 = orthogonality_window(space, f2)
    steps.append(c3)
    tracked.append(("iii-iv", e2))

    e4_formula = e2 * e2 / 2
    kern, c4 = l2_to_kernel(space, f2, ParamTuple(e4_formula, p.r, p.t), tol)
    e4 = _track(e4_formula, c4.observed, eps)
    _retarget(c4, e4, tol)
    steps.append(c4)
    tracked.append(("iv-v", e4))

    op, c5 = kernel_to_operator(space, kern)
    steps.append(c5)
    tracked.append(("v-vi", e4))

    f6, c6 = operator_to_l2(space, op, e4, p.r, p.t, tol)
    e6 = _track(c6.details["final_bound"], c6.observed, eps)
    c6.details["input_eps"], c6.eps = e4, e6  # report the output bound, like the other steps
    c6.checks["below_tracked"] = certify_lt(c6.observed, e6, tol.margin)
    c6.passed = all(c6.checks.values())
    steps.append(c6)
    tracked.append(("vi-iii", e6))

    w7, c7 = l2_to_witness(space, f6, e6, p.r, p.t, tol)
    steps.append(c7)
    tracked.append(("iii-i", c7.eps))

    art.update(l1=f1, l2=f2, kernel=kern, operator=op, l2_back=f6)
    nominal = nominal_chain(eps)
    return RoundTrip(steps, nominal, tracked, c7.eps, w7, all(s.passed for s in steps),
                     math.isfinite(nominal[-1][1]), art)
