"""Discrete-clock dynamic program for the IID query-only stopping game.

The strategy owns k non-increasing step threshold functions; time is cut
into m clock blocks and every successful query snaps the clock to the next
block boundary. Under the Poissonized arrival model the success probability
P[last successful query is above the witness level] satisfies a two-branch
backward recurrence over (block, function) cells, which this module fills
exactly, together with optional first/second derivative tables with respect
to the witness rate l'.

Cell indexing follows the statement convention: j runs 1..k+1 with j = k+1
the exhausted-threshold sentinel, i runs 0..m, and the answer cell is
Prob[F, 1, 0]. Arrays store j-1 on their second axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport, Witness
from .errors import DomainError, ValidationError

__all__ = [
    "RateMatrix",
    "DPTable",
    "build_rate_matrix",
    "semionline_dp",
    "semionline_defect",
    "semionline_verify",
]

F, T = 0, 1  # first axis of every table: conditioned-below / conditioned-above


@dataclass(frozen=True)
class RateMatrix:
    """k x m matrix of expected counts above each threshold per clock block."""

    rates: np.ndarray
    phases: int

    def __post_init__(self) -> None:
        C = np.asarray(self.rates, dtype=float)
        if C.ndim != 2:
            raise ValidationError("rates must be a k x m matrix")
        k, m = C.shape
        if m % self.phases != 0:
            raise ValidationError(f"phase count {self.phases} must divide m={m}")
        if np.any(C <= 0):
            raise ValidationError("all rates must be positive")
        if np.any(np.diff(C, axis=1) < 0):
            raise ValidationError("each row must be non-decreasing over time")
        C = C.copy()
        C.setflags(write=False)
        object.__setattr__(self, "rates", C)

    @property
    def k(self) -> int:
        return self.rates.shape[0]

    @property
    def m(self) -> int:
        return self.rates.shape[1]

    @property
    def max_rate(self) -> float:
        return float(self.rates.max())


def build_rate_matrix(flat, k: int, p: int, m: int, layout: str = "forward") -> RateMatrix:
    """Expand k*p per-phase rates into a k x m matrix.

    forward layout: value j*p + i is function j's rate on phase i in time
    order. appendix layout: each function's p phases are stored in reversed
    time order, so forward(reversed-per-function) == appendix(flat).
    Each phase value is replicated m/p times.
    """
    vals = [float(v) for v in flat]
    if len(vals) != k * p:
        raise ValidationError(f"expected {k * p} values, got {len(vals)}")
    if m % p != 0:
        raise ValidationError(f"p={p} must divide m={m}")
    if layout not in ("forward", "appendix"):
        raise ValidationError(f"unknown layout {layout!r}")
    reps = m // p
    rows = []
    for j in range(k):
        phases = vals[j * p:(j + 1) * p]
        if layout == "appendix":
            phases = phases[::-1]
        rows.append(np.repeat(phases, reps))
    return RateMatrix(np.array(rows), phases=p)


@dataclass
class DPTable:
    """Filled recurrence tables; prob[b, j-1, i] is the cell (b, j, i)."""

    prob: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None

    @property
    def success_probability(self) -> float:
        """P[last successful query beats the witness level] = Prob[F, 1, 0]."""
        return float(self.prob[F, 0, 0])


def semionline_dp(C: RateMatrix, lprime: float, derivatives: bool = False) -> DPTable:
    """Fill the table backward in (i, j) for a single witness rate l'.

    Within a block only the first arrival above the active threshold matters;
    conditioned on one existing, it beats the witness level with probability
    l'/C[j,i] when l' <= C[j,i] and surely otherwise. At l' = C[j,i] both
    branches agree, and the l' <= C branch is used.
    """
    if lprime <= 0:
        raise DomainError("lprime must be positive")
    rates = C.rates
    k, m = C.k, C.m
    prob = np.zeros((2, k + 1, m + 1))
    prob[T, :, m] = 1.0
    prob[T, k, :] = 1.0
    d1 = np.zeros_like(prob) if derivatives else None
    d2 = np.zeros_like(prob) if derivatives else None
    for i in range(m - 1, -1, -1):
        for j in range(k - 1, -1, -1):
            c = rates[j, i]
            stay = math.exp(-c / m)
            hit = -math.expm1(-c / m)
            if lprime <= c:
                w = lprime / c
                succ = w * prob[T, j + 1, i + 1] + (1.0 - w) * prob[F, j + 1, i + 1]
                for b in (F, T):
                    prob[b, j, i] = stay * prob[b, j, i + 1] + hit * succ
                if derivatives:
                    gap = prob[T, j + 1, i + 1] - prob[F, j + 1, i + 1]
                    ds = gap / c + w * d1[T, j + 1, i + 1] + (1.0 - w) * d1[F, j + 1, i + 1]
                    dgap = d1[T, j + 1, i + 1] - d1[F, j + 1, i + 1]
                    dds = 2.0 * dgap / c + w * d2[T, j + 1, i + 1] + (1.0 - w) * d2[F, j + 1, i + 1]
                    for b in (F, T):
                        d1[b, j, i] = stay * d1[b, j, i + 1] + hit * ds
                        d2[b, j, i] = stay * d2[b, j, i + 1] + hit * dds
            else:
                succ = prob[T, j + 1, i + 1]
                for b in (F, T):
                    prob[b, j, i] = stay * prob[b, j, i + 1] + hit * succ
                if derivatives:
                    for b in (F, T):
                        d1[b, j, i] = stay * d1[b, j, i + 1] + hit * d1[T, j + 1, i + 1]
                        d2[b, j, i] = stay * d2[b, j, i + 1] + hit * d2[T, j + 1, i + 1]
    return DPTable(prob=prob, d1=d1, d2=d2)


def _success_grid(C: RateMatrix, ls: np.ndarray, derivatives: bool = False):
    """Prob[F,1,0] (and optionally its l'-derivatives) for a vector of rates."""
    rates = C.rates
    k, m = C.k, C.m
    G = len(ls)
    P = np.zeros((2, k + 1, G))
    P[T] = 1.0
    D1 = np.zeros_like(P) if derivatives else None
    D2 = np.zeros_like(P) if derivatives else None
    for i in range(m - 1, -1, -1):
        newP = np.empty_like(P)
        newP[F, k] = 0.0
        newP[T, k] = 1.0
        if derivatives:
            newD1 = np.zeros_like(P)
            newD2 = np.zeros_like(P)
        for j in range(k - 1, -1, -1):
            c = rates[j, i]
            stay = math.exp(-c / m)
            hit = -math.expm1(-c / m)
            low = ls <= c
            w = np.where(low, ls / c, 0.0)
            succ = np.where(low, w * P[T, j + 1] + (1.0 - w) * P[F, j + 1], P[T, j + 1])
            for b in (F, T):
                newP[b, j] = stay * P[b, j] + hit * succ
            if derivatives:
                ds = np.where(
                    low,
                    (P[T, j + 1] - P[F, j + 1]) / c + w * D1[T, j + 1] + (1.0 - w) * D1[F, j + 1],
                    D1[T, j + 1],
                )
                dds = np.where(
                    low,
                    2.0 * (D1[T, j + 1] - D1[F, j + 1]) / c
                    + w * D2[T, j + 1] + (1.0 - w) * D2[F, j + 1],
                    D2[T, j + 1],
                )
                for b in (F, T):
                    newD1[b, j] = stay * D1[b, j] + hit * ds
                    newD2[b, j] = stay * D2[b, j] + hit * dds
        P = newP
        if derivatives:
            D1, D2 = newD1, newD2
    if derivatives:
        return P[F, 0], D1[F, 0], D2[F, 0]
    return P[F, 0]


def semionline_defect(C: RateMatrix, lprime: float, target: float) -> float:
    """Prob[F,1,0] - target * (1 - e^(-l')) at one witness rate."""
    if not 0.0 < target < 1.0:
        raise DomainError("target must lie in (0, 1)")
    table = semionline_dp(C, lprime)
    return table.success_probability - target * (-math.expm1(-lprime))


def semionline_best_ratio(C: RateMatrix, eps: float) -> tuple[float, float]:
    """Best grid-supported ratio and its witness rate.

    The ratio min(tail branch, min over the eps-grid of P(l')/(1 - e^(-l')))
    is the largest target the eps-grid certificate can support; use
    semionline_verify to actually certify it.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    cmax = C.max_rate
    npts = math.ceil(cmax / eps)
    grid = np.minimum(np.arange(1, npts + 1) * eps, cmax)
    grid = np.unique(np.concatenate([grid, np.unique(C.rates.ravel())]))
    P = _success_grid(C, grid)
    quot = P / (-np.expm1(-grid))
    i = int(np.argmin(quot))
    best, witness = float(quot[i]), float(grid[i])
    tail = -math.expm1(-float(C.rates[0].sum()) / C.m)
    if tail < best:
        best, witness = tail, cmax
    return best, witness


def semionline_verify(
    C: RateMatrix,
    target: float,
    eps: float,
    derivative_check: bool = False,
) -> BoundReport:
    """Certify the target ratio on the eps-grid over (0, max rate].

    Two checks: the tail branch for witness rates above every entry of C
    (where success only needs any first-function query to land), and the
    defect on the grid, which is augmented with the distinct rate values so
    every cell between consecutive grid points is branch-smooth. With
    derivative_check, the second-derivative recurrence bounds |f''| on the
    grid and the report gains a certified inter-grid error margin
    defect_min - max|f''| * eps^2 / 8.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if not 0.0 < target < 1.0:
        raise DomainError("target must lie in (0, 1)")
    cmax = C.max_rate
    npts = math.ceil(cmax / eps)
    grid = np.minimum(np.arange(1, npts + 1) * eps, cmax)
    grid = np.unique(np.concatenate([grid, np.unique(C.rates.ravel())]))

    tail_defect = -math.expm1(-float(C.rates[0].sum()) / C.m) - target

    details: dict = {"eps": eps, "tail_defect": tail_defect, "max_rate": cmax}
    if derivative_check:
        P, D1, D2 = _success_grid(C, grid, derivatives=True)
        f2 = D2 + target * np.exp(-grid)
        max_abs_f2 = float(np.abs(f2).max())
        details["max_abs_second_derivative"] = max_abs_f2
    else:
        P = _success_grid(C, grid)

    defect = P - target * (-np.expm1(-grid))
    i = int(np.argmin(defect))
    defect_min = float(defect[i])
    witness = Witness(1, float(grid[i]))
    if tail_defect < defect_min:
        defect_min = tail_defect
        witness = Witness(0, cmax)  # segment 0 marks the tail branch

    if derivative_check:
        details["certified_margin"] = defect_min - details["max_abs_second_derivative"] * eps * eps / 8.0

    return BoundReport(
        ratio=target,
        defect_min=defect_min,
        witness=witness,
        grid_points=int(len(grid)),
        refined=False,
        details=details,
    )
