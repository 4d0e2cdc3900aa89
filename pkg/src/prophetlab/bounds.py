"""Closed-form competitive-ratio lower bounds with grid-certified minima.

Every evaluator here reduces to the same pattern: a stochastic-dominance
argument yields, per threshold segment, a success probability f_j(witness)
that must dominate ratio * P[max >= witness-level] for every witness in the
segment. A bound is certified by showing the defect

    f_j(w) - ratio * (1 - survival-term(w))

is non-negative over a deterministic grid (2000 points per segment by
default), with golden-section refinement around the grid argmin. Grids are
primary and refinement secondary, so certificates never depend on a
black-box optimizer finding the true minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, SolverError, ValidationError
from .special import TruncationPolicy, stable_qtk, stirling_first_ratio_table, lambert_w

__all__ = [
    "RateSchedule",
    "QuantileSchedule",
    "BoundReport",
    "Witness",
    "iid_curve_bound",
    "single_threshold_secretary_bound",
    "top1of2_two_threshold_bound",
    "top1of2_two_threshold_branches",
    "top1of2_two_threshold_gq",
    "top1of2_three_threshold_bound",
    "top1of2_three_threshold_closed_forms",
    "top1ofk_lambertw_bound",
    "zeta_k_solve",
    "top1of2_iid_mthreshold_bound",
    "top1ofk_record_bound",
    "secretary_blind_bound",
    "blind_T_bounds",
]

DEFAULT_GRID_POINTS = 2000
_REFINE_WIDTH = 1e-12
_DEGENERATE_WIDTH = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

ZETA_SERIES_POLICY = TruncationPolicy(max_terms=200)


@dataclass(frozen=True)
class RateSchedule:
    """Step thresholds by expected count: rate c_i applies on block [(i-1)/m, i/m]."""

    steps: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValidationError("a rate schedule needs at least one step")
        if any(c <= 0 for c in self.steps):
            raise ValidationError("all rates must be positive")

    @property
    def m(self) -> int:
        return len(self.steps)

    def require_ascending(self) -> None:
        if any(b < a for a, b in zip(self.steps, self.steps[1:])):
            raise ValidationError("rates must be ascending (thresholds descend over time)")

    def mean(self) -> float:
        return math.fsum(self.steps) / self.m


@dataclass(frozen=True)
class QuantileSchedule:
    """Maximum-quantiles alpha_0 = 1 > alpha_1 > ... > alpha_m > alpha_{m+1} = 0."""

    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        a = self.alphas
        if len(a) < 3:
            raise ValidationError("need at least one interior quantile")
        if a[0] != 1.0 or a[-1] != 0.0:
            raise ValidationError("endpoints must be pinned to 1 and 0")
        if any(y >= x for x, y in zip(a, a[1:])):
            raise ValidationError("quantiles must be strictly decreasing")

    @property
    def m(self) -> int:
        return len(self.alphas) - 2

    @property
    def inner(self) -> tuple[float, ...]:
        return self.alphas[1:-1]


class Witness(NamedTuple):
    segment: int
    value: float


@dataclass
class BoundReport:
    """A certified lower bound: valid only when defect_min >= 0."""

    ratio: float
    defect_min: float
    witness: Witness | None
    grid_points: int
    refined: bool
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.defect_min >= 0.0

    def as_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "defect_min": self.defect_min,
            "witness": None if self.witness is None else {
                "segment": self.witness.segment, "value": self.witness.value},
            "grid_points": self.grid_points,
            "refined": self.refined,
            "certified": self.certified,
            "details": self.details,
        }


def _round_down(x: float, ulps: int = 4) -> float:
    for _ in range(ulps):
        x = math.nextafter(x, -math.inf)
    return x


def _golden_min(fn: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > _REFINE_WIDTH:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def _segment_min(
    fn_vec: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    grid_points: int,
    refine: bool,
) -> tuple[float, float, bool]:
    """(min value, argmin, refined?) of fn over [lo, hi], grid first."""
    if hi - lo < _DEGENERATE_WIDTH:
        ys = fn_vec(np.array([lo, hi]))
        i = int(np.argmin(ys))
        return float(ys[i]), (lo, hi)[i], False
    xs = np.linspace(lo, hi, grid_points)
    ys = np.asarray(fn_vec(xs), dtype=float)
    i = int(np.argmin(ys))
    best_y, best_x = float(ys[i]), float(xs[i])
    did = False
    if refine:
        a = float(xs[max(i - 1, 0)])
        b = float(xs[min(i + 1, len(xs) - 1)])
        if b > a:
            x, y = _golden_min(lambda t: float(fn_vec(np.array([t]))[0]), a, b)
            if y < best_y:
                best_y, best_x = y, x
            did = True
    return best_y, best_x, did


# ---------------------------------------------------------------------------
# IID step-curve bound
# ---------------------------------------------------------------------------


def _iid_curve_coeffs(cs: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment constants of f_j(l) = P[j] + A[j] * l (1-based j)."""
    m = len(cs)
    lam = np.zeros(m + 2)  # lam[j] = (1/m) sum_{r<j} c_r
    for j in range(2, m + 2):
        lam[j] = lam[j - 1] + cs[j - 2] / m
    P = np.zeros(m + 1)
    A = np.zeros(m + 1)
    for j in range(1, m + 1):
        P[j] = -math.expm1(-lam[j])
        A[j] = math.fsum(
            math.exp(-lam[k]) * (-math.expm1(-cs[k - 1] / m)) / cs[k - 1]
            for k in range(j, m + 1)
        )
    return P, A


def iid_curve_bound(
    sched: RateSchedule,
    grid_points: int = DEFAULT_GRID_POINTS,
    target: float | None = None,
    refine: bool = True,
) -> BoundReport:
    """Step-curve bound for IID variables under random arrival times.

    The curve places rate c_i on time block [(i-1)/m, i/m]; per segment j the
    success probability is f_j(l') = 1 - e^(-lam_j) + A_j l', linear in the
    witness rate l', and the certified ratio is

        min(1 - e^(-mean c), min_j inf_{l' in [c_{j-1}, c_j]} f_j(l')/(1 - e^(-l'))).

    With target set, returns the defect certificate for that ratio instead of
    searching for the best one.
    """
    sched.require_ascending()
    cs = sched.steps
    m = sched.m
    P, A = _iid_curve_coeffs(cs)
    global_branch = -math.expm1(-sched.mean())

    def quotient(j: int, ls: np.ndarray) -> np.ndarray:
        f = P[j] + A[j] * ls
        denom = -np.expm1(-ls)
        out = np.where(ls > 0, f / np.where(denom == 0, 1.0, denom), np.inf)
        if j == 1:
            out = np.where(ls == 0, A[1], out)  # l'->0 limit of f_1/(1-e^-l')
        return out

    candidates: list[tuple[float, Witness | None, bool]] = [(global_branch, None, False)]
    edges = [0.0, *cs]
    for j in range(1, m + 1):
        y, x, did = _segment_min(lambda ls, jj=j: quotient(jj, ls),
                                 edges[j - 1], edges[j], grid_points, refine)
        candidates.append((y, Witness(j, x), did))

    best, witness, refined = min(candidates, key=lambda t: t[0])
    ratio = target if target is not None else _round_down(best)

    defect_min, defect_wit = math.inf, witness
    for j in range(1, m + 1):
        ls = np.linspace(edges[j - 1], edges[j], grid_points)
        d = (P[j] + A[j] * ls) - ratio * (-np.expm1(-ls))
        i = int(np.argmin(d))
        if d[i] < defect_min:
            defect_min, defect_wit = float(d[i]), Witness(j, float(ls[i]))
    if global_branch - ratio < defect_min:
        defect_min, defect_wit = global_branch - ratio, None

    return BoundReport(
        ratio=ratio,
        defect_min=defect_min,
        witness=defect_wit if target is not None else witness,
        grid_points=grid_points,
        refined=refined,
        details={"global_branch": global_branch, "best_quotient": best},
    )


# ---------------------------------------------------------------------------
# Single-threshold bounds
# ---------------------------------------------------------------------------


def single_threshold_secretary_bound(q: float) -> float:
    """Random-arrival single threshold at rate q: min(1-e^-q, (1-e^-q)/q).

    The second branch is the l' -> 0 infimum of the in-segment expression,
    which is monotone increasing in l'; q = 1 gives the classic 1 - 1/e.
    """
    if q <= 0:
        raise DomainError("q must be positive")
    p = -math.expm1(-q)
    return min(p, p / q)


def top1of2_two_threshold_branches(c1: float, c2: float) -> tuple[float, float, float]:
    if not c1 > c2 > 0:
        raise ValidationError(f"need c1 > c2 > 0, got ({c1}, {c2})")
    b1 = -math.expm1(-c1)
    e1, e2 = math.exp(c1), math.exp(c2)
    b2 = math.exp(-c1 - c2) * (e1 * (e2 - 1.0) + 2.0 * math.sqrt((e1 - 1.0) * (e2 - 1.0)) - e2 + 2.0)
    b3 = math.exp(-c2) + math.exp(-c1) * c2
    return b1, b2, b3


def top1of2_two_threshold_bound(c1: float, c2: float) -> float:
    """Two-threshold bound for accept-up-to-two with adversarial order.

    min of three closed branches: below both thresholds, between them (the
    minimized middle expression; see top1of2_two_threshold_gq for the
    pre-minimization form), and above both.
    """
    return min(top1of2_two_threshold_branches(c1, c2))


def top1of2_two_threshold_gq(c1: float, c2: float, q) -> np.ndarray | float:
    """Pre-minimization middle expression g(q) for q in [c2, c1]."""
    q = np.asarray(q, dtype=float)
    num = np.exp(-(c1 - q)) * (-np.expm1(-q)) + (-np.expm1(-(c1 - q))) * (-math.expm1(-c2))
    out = num / (-np.expm1(-q))
    return float(out) if out.ndim == 0 else out


def top1of2_three_threshold_closed_forms(c1: float, c2: float, c3: float) -> tuple[float, float, float]:
    """Printed closed-form minima of the three in-segment expressions."""
    e1, e2, e3 = math.exp(c1), math.exp(c2), math.exp(c3)
    f2 = math.exp(-c1 - c2) * (e1 * (e2 - 1.0) - e2 + 2.0 * math.sqrt((e1 - 1.0) * (e2 - 1.0)) + 2.0)
    f3 = (
        e2 * (e2 - 2.0) * (e3 - 1.0)
        + e1 * e3
        + 2.0 * math.sqrt(e2 * (e2 - 1.0) * (e3 - 1.0) * (e2 + e1 * e3 - e2 * e3))
    ) * math.exp(-(c1 + c2 + c3))
    f4 = math.exp(-c1) * c3 - math.exp(-c1) + math.exp(-c2) + math.exp(-c1 + c2 - c3)
    return f2, f3, f4


def top1of2_three_threshold_bound(
    c1: float,
    c2: float,
    c3: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    refine: bool = True,
) -> BoundReport:
    """Three-threshold bound: min(C1, C2, C3, C4).

    C2..C4 are certified by grid infimum of the witness-parameterized
    expressions; the printed closed forms are recorded alongside for
    cross-checking but the grid values decide the ratio.
    """
    if not c1 > c2 > c3 > 0:
        raise ValidationError(f"need c1 > c2 > c3 > 0, got ({c1}, {c2}, {c3})")
    e1, e2, e3 = math.exp(c1), math.exp(c2), math.exp(c3)

    def expr2(ls: np.ndarray) -> np.ndarray:
        return np.exp(-c1 - c2 + ls) * (-e1 - e2 + e1 * e2 + np.exp(ls)) / np.expm1(ls)

    def expr3(ls: np.ndarray) -> np.ndarray:
        num = (
            e2 * np.exp(ls) + e1 * e3 * np.exp(ls) - e2 * e3 * np.exp(ls)
            - e2 * e2 - e1 * e3 + e2 * e2 * e3
        )
        return np.exp(-c1 - c2 - c3 + ls) * num / np.expm1(ls)

    def expr4(ls: np.ndarray) -> np.ndarray:
        const = math.exp(-c2) + math.exp(-c1 + c2 - c3) + math.exp(-c1) * c3
        return np.exp(ls) * (const - math.exp(-c1) * (ls + 1.0))

    c1_branch = -math.expm1(-c1)
    segs = [
        (2, expr2, c2, c1),
        (3, expr3, c3, c2),
        (4, expr4, 1e-12, c1),
    ]
    grid_vals = {}
    candidates: list[tuple[float, Witness | None, bool]] = [(c1_branch, Witness(1, c1), False)]
    for label, fn, lo, hi in segs:
        y, x, did = _segment_min(fn, lo, hi, grid_points, refine)
        grid_vals[f"C{label}"] = y
        candidates.append((y, Witness(label, x), did))

    best, witness, refined = min(candidates, key=lambda t: t[0])
    ratio = _round_down(best)
    defect_min = best - ratio
    f2c, f3c, f4c = top1of2_three_threshold_closed_forms(c1, c2, c3)
    return BoundReport(
        ratio=ratio,
        defect_min=defect_min,
        witness=witness,
        grid_points=grid_points,
        refined=refined,
        details={
            "C1": c1_branch,
            **grid_vals,
            "closed_forms": {"C2": f2c, "C3": f3c, "C4": f4c},
        },
    )


# ---------------------------------------------------------------------------
# Accept-up-to-k bounds
# ---------------------------------------------------------------------------


class LambertBound(NamedTuple):
    rate: float
    ratio: float


def top1ofk_lambertw_bound(k: int) -> LambertBound:
    """Single-threshold rate c = k*W((k!)^(1/k)/k) and ratio 1 - e^(-c).

    The defining equation forces 1 - e^(-c) = 1 - c^k/k!; the residual of
    that identity is asserted below 1e-10 before returning.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    arg = math.exp(math.lgamma(k + 1) / k) / k
    c = k * lambert_w(arg)
    ratio = -math.expm1(-c)
    residual = abs(math.exp(-c) - math.exp(k * math.log(c) - math.lgamma(k + 1)))
    if residual > 1e-10:
        raise SolverError(f"Lambert identity residual {residual:.3e} too large for k={k}")
    return LambertBound(rate=c, ratio=ratio)


class ZetaSolution(NamedTuple):
    zeta: float
    ratio: float
    residual: float
    tail_bound: float


def _records_le_k(nmax: int, k: int) -> np.ndarray:
    """G[n] = P[a uniform permutation of n elements has at most k records]."""
    R = stirling_first_ratio_table(nmax, k)
    return R.sum(axis=1)


def zeta_k_solve(k: int, policy: TruncationPolicy | None = None) -> ZetaSolution:
    """Fixed point of the raise-threshold success equation for k slots.

    Solves, by bisection on [1e-6, 50],
        1 - e^(-x) = sum_{i<k} pois(x,i) + sum_{i>=k} pois(x,i) * G_k(i+1)
    where G_k(n) is the probability that n values in random order show at
    most k running maxima (a normalized Stirling-number row sum). The i-sum
    is truncated at policy.max_terms (default 200) with a geometric tail
    bound reported in the result.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if policy is None:
        policy = ZETA_SERIES_POLICY
    T = policy.max_terms
    G = _records_le_k(T + 2, k)

    def equation(x: float) -> float:
        rhs = 0.0
        pmf = math.exp(-x)
        for i in range(T + 1):
            rhs += pmf if i < k else pmf * G[i + 1]
            pmf *= x / (i + 1)
        return -math.expm1(-x) - rhs

    lo, hi = 1e-6, 50.0
    if equation(lo) > 0 or equation(hi) < 0:
        raise SolverError(f"zeta root not bracketed in [{lo}, {hi}] for k={k}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if equation(mid) > 0:
            hi = mid
        else:
            lo = mid
    zeta = 0.5 * (lo + hi)
    residual = abs(equation(zeta))
    if residual > 1e-10:
        raise SolverError(f"zeta residual {residual:.3e} exceeds 1e-10 for k={k}")
    # dropped tail <= pois(zeta, T+1) * geometric factor, all terms positive
    log_pmf = (T + 1) * math.log(zeta) - zeta - math.lgamma(T + 2)
    tail = math.exp(log_pmf) / max(1.0 - zeta / (T + 2), 1e-12)
    return ZetaSolution(zeta=zeta, ratio=-math.expm1(-zeta), residual=residual, tail_bound=tail)


class RecordBound(NamedTuple):
    ratio: float
    rate: float


def top1ofk_record_bound(k: int) -> RecordBound:
    """Super-exponential bound 1 - k^(-k/5), with the matching rate e^sqrt(k)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return RecordBound(ratio=1.0 - k ** (-k / 5.0), rate=math.exp(math.sqrt(k)))


# ---------------------------------------------------------------------------
# IID accept-up-to-2 with m descending thresholds
# ---------------------------------------------------------------------------


def _mthreshold_coeffs(cs: Sequence[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """f_j(l) = P[j] + A[j] l + B[j] l^2 for the two-slot stepped strategy."""
    m = len(cs)
    lam = np.zeros(m + 2)
    for j in range(2, m + 2):
        lam[j] = lam[j - 1] + cs[j - 2] / m
    P = np.zeros(m + 1)
    A = np.zeros(m + 2)
    B = np.zeros(m + 2)
    for j in range(m, 0, -1):
        c = cs[j - 1]
        pref = math.exp(-lam[j]) * math.exp(-(m + 1) * c / m) / (m * c * c)
        coef1 = m * math.exp(c) * math.expm1(c / m)  # m e^c (e^{c/m} - 1)
        coef2 = c * math.exp(j * c / m)
        A[j] = A[j + 1] + pref * (2.0 * c * coef1 - c * coef2)
        B[j] = B[j + 1] + pref * (coef2 - coef1)
        P[j] = -math.expm1(-lam[j])
    return P, A[: m + 1], B[: m + 1]


def top1of2_iid_mthreshold_bound(
    sched: RateSchedule,
    grid_points: int = DEFAULT_GRID_POINTS,
    target: float | None = None,
    refine: bool = True,
) -> BoundReport:
    """Stepped-threshold bound for IID accept-up-to-two.

    Identical segment structure to iid_curve_bound but the per-segment
    success probability is quadratic in the witness rate, reflecting the
    second accept slot. Certified ratio is the min of the global branch
    1 - e^(-mean c) and the per-segment grid-refined infima.
    """
    sched.require_ascending()
    cs = sched.steps
    m = sched.m
    P, A, B = _mthreshold_coeffs(cs)
    global_branch = -math.expm1(-sched.mean())

    def f_of(j: int, ls: np.ndarray) -> np.ndarray:
        return P[j] + A[j] * ls + B[j] * ls * ls

    def quotient(j: int, ls: np.ndarray) -> np.ndarray:
        denom = -np.expm1(-ls)
        out = np.where(ls > 0, f_of(j, ls) / np.where(denom == 0, 1.0, denom), np.inf)
        if j == 1:
            out = np.where(ls == 0, A[1], out)
        return out

    candidates: list[tuple[float, Witness | None, bool]] = [(global_branch, None, False)]
    edges = [0.0, *cs]
    for j in range(1, m + 1):
        y, x, did = _segment_min(lambda ls, jj=j: quotient(jj, ls),
                                 edges[j - 1], edges[j], grid_points, refine)
        candidates.append((y, Witness(j, x), did))

    best, witness, refined = min(candidates, key=lambda t: t[0])
    ratio = target if target is not None else _round_down(best)

    defect_min, defect_wit = math.inf, witness
    for j in range(1, m + 1):
        ls = np.linspace(edges[j - 1], edges[j], grid_points)
        d = f_of(j, ls) - ratio * (-np.expm1(-ls))
        i = int(np.argmin(d))
        if d[i] < defect_min:
            defect_min, defect_wit = float(d[i]), Witness(j, float(ls[i]))
    if global_branch - ratio < defect_min:
        defect_min, defect_wit = global_branch - ratio, None

    return BoundReport(
        ratio=ratio,
        defect_min=defect_min,
        witness=defect_wit if target is not None else witness,
        grid_points=grid_points,
        refined=refined,
        details={"global_branch": global_branch, "best_quotient": best},
    )


# ---------------------------------------------------------------------------
# Blind quantile strategy for random arrival order
# ---------------------------------------------------------------------------


def _neumaier_add(acc: np.ndarray, comp: np.ndarray, term: np.ndarray) -> None:
    # compensated accumulation, in place
    t = acc + term
    comp += np.where(np.abs(acc) >= np.abs(term), (acc - t) + term, (term - t) + acc)
    acc[...] = t


def _blind_fj(
    alphas: Sequence[float],
    j: int,
    eta: np.ndarray,
    policy: TruncationPolicy,
    roots: np.ndarray,
) -> np.ndarray:
    """Success probability f_j over a vector of witness quantiles eta.

    alphas has the pinned endpoints (length m+2); segment j covers
    eta in [alpha_j, alpha_{j-1}]. Segment m+1 keeps only the early-pick
    term, which is constant in eta. Accumulation over k is compensated.
    """
    m = len(alphas) - 2
    eta = np.asarray(eta, dtype=float)
    part1 = math.fsum((1.0 - alphas[kk]) / m for kk in range(1, j))
    if j == m + 1:
        return np.full_like(eta, part1)

    acc = np.zeros_like(eta)
    comp = np.zeros_like(eta)
    prod = float(np.prod(roots[1:j]))  # running prod_{nu<k} alpha_nu^(1/m)
    for k in range(j, m + 1):
        denoms = m - (k - 1) + np.arange(j)
        s = np.zeros_like(eta)
        wk = np.zeros_like(eta)
        for nu in range(j):
            hi_a = alphas[nu]
            lo_a = alphas[nu + 1] if nu < j - 1 else eta
            r = (denoms[nu] / m) * np.log(hi_a / lo_a)
            wk = wk + np.exp(-s) * (-np.expm1(-r)) / denoms[nu]
            s = s + r
        q = stable_qtk(np.log(eta / alphas[k]) / m, policy)
        _neumaier_add(acc, comp, prod * wk * q)
        prod *= roots[k]
    return part1 + acc + comp


def secretary_blind_bound(
    sched: QuantileSchedule,
    target: float | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
    policy: TruncationPolicy | None = None,
    refine: bool = True,
) -> BoundReport:
    """Blind-strategy bound for random arrival order, m stepped quantiles.

    Certifies ratio <= f_j(eta)/(1 - eta) on every segment
    [alpha_j, alpha_{j-1}], j = 1..m+1. The near-singular factor in f_j is
    always evaluated through the truncated series stable_qtk, which lower
    bounds the closed form, so raising policy.max_terms can only raise the
    reported ratio.
    """
    if policy is None:
        policy = TruncationPolicy(max_terms=30)
    alphas = sched.alphas
    m = sched.m
    roots = np.array([a ** (1.0 / m) if a > 0 else 0.0 for a in alphas])

    # eta -> 1 limit of f_1/(1 - eta); the quotient is 0/0 at the corner
    top_limit = math.fsum(
        float(np.prod(roots[1:k])) * stable_qtk(math.log(1.0 / alphas[k]) / m, policy) / m
        for k in range(1, m + 1)
    )

    def quotient(j: int, etas: np.ndarray) -> np.ndarray:
        f = _blind_fj(alphas, j, etas, policy, roots)
        denom = 1.0 - etas
        out = np.where(denom > 0, f / np.where(denom == 0, 1.0, denom), top_limit)
        return out

    candidates: list[tuple[float, Witness, bool]] = []
    for j in range(1, m + 2):
        lo, hi = alphas[j], alphas[j - 1]
        y, x, did = _segment_min(lambda e, jj=j: quotient(jj, e), lo, hi, grid_points, refine)
        candidates.append((y, Witness(j, x), did))

    best, witness, refined = min(candidates, key=lambda t: t[0])
    ratio = target if target is not None else _round_down(best)

    defect_min, defect_wit = math.inf, witness
    for j in range(1, m + 2):
        lo, hi = alphas[j], alphas[j - 1]
        etas = np.linspace(lo, hi, grid_points)
        d = _blind_fj(alphas, j, etas, policy, roots) - ratio * (1.0 - etas)
        i = int(np.argmin(d))
        if d[i] < defect_min:
            defect_min, defect_wit = float(d[i]), Witness(j, float(etas[i]))

    return BoundReport(
        ratio=ratio,
        defect_min=defect_min,
        witness=defect_wit if target is not None else witness,
        grid_points=grid_points,
        refined=refined,
        details={
            "best_quotient": best,
            "series_terms": policy.max_terms,
            "precision": "float64 with compensated accumulation",
        },
    )


def blind_T_bounds(sched, k: int, n: int) -> tuple[float, float]:
    """Brackets on the selection time T of a per-step quantile strategy.

    Returns (lower bound on P[T <= k], lower bound on P[T > k]):
        P[T <= k] >= (1/n) sum_{j<=k} (1 - alpha_j)
        P[T > k]  >= (prod_{j<=k} alpha_j)^(1/n).
    Accepts a QuantileSchedule or a plain length-n sequence of per-step
    quantiles (weakly decreasing, values in [0, 1]); the plain form admits
    the degenerate all-equal schedules the strict schedule type rejects.
    """
    if isinstance(sched, QuantileSchedule):
        alphas = sched.inner
    else:
        alphas = tuple(float(a) for a in sched)
        if any(not 0.0 <= a <= 1.0 for a in alphas):
            raise ValidationError("quantiles must lie in [0, 1]")
        if any(b > a for a, b in zip(alphas, alphas[1:])):
            raise ValidationError("quantiles must be non-increasing")
    if len(alphas) != n:
        raise ValidationError(f"need one quantile per step: {len(alphas)} != n={n}")
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, n], got {k}")
    lower_le = math.fsum(1.0 - a for a in alphas[:k]) / n
    prod = 1.0
    for a in alphas[:k]:
        prod *= a
    lower_gt = prod ** (1.0 / n)
    return lower_le, lower_gt
