"""Special-function kernels shared by every bound evaluator.

All functions here are pure. The exact Stirling triangle is built once at
import time, so concurrent callers only ever read it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "TruncationPolicy",
    "DEFAULT_QTK_POLICY",
    "poisson_pmf",
    "stirling_first_unsigned",
    "stirling_first_ratio_table",
    "lambert_w",
    "stable_qtk",
]

#: Largest n for which stirling_first_unsigned guarantees exact results.
STIRLING_EXACT_MAX_N = 64

_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class TruncationPolicy:
    """How far to carry a positive-term series before stopping.

    max_terms: number of terms summed (the truncation length).
    tail_tolerance: if positive, summation may stop early once a geometric
        bound on the dropped tail falls below this value.
    """

    max_terms: int = 30
    tail_tolerance: float = 0.0

    def __post_init__(self) -> None:
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")
        if self.tail_tolerance < 0:
            raise DomainError("tail_tolerance must be >= 0")


DEFAULT_QTK_POLICY = TruncationPolicy(max_terms=30)


def poisson_pmf(lam: float, k: int) -> float:
    """P[X = k] for X ~ Poisson(lam).

    Evaluated in log space for k > 20 so large rates cannot overflow; the
    direct product is used for small k where it is exact to the last ulp.
    """
    if lam < 0:
        raise DomainError(f"Poisson rate must be >= 0, got {lam}")
    if k < 0:
        raise DomainError(f"count must be >= 0, got {k}")
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    if k > 20:
        return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))
    out = math.exp(-lam)
    for i in range(1, k + 1):
        out *= lam / i
    return out


def _build_stirling_rows(nmax: int) -> list[list[int]]:
    # rows[n][j] = number of permutations of n elements with j left-to-right
    # maxima (equivalently j cycles), via rows[n+1][j] = n*rows[n][j] + rows[n][j-1]
    rows = [[1]]
    for n in range(nmax):
        prev = rows[-1]
        nxt = [0] * (n + 2)
        for j, v in enumerate(prev):
            nxt[j] += n * v
            nxt[j + 1] += v
        rows.append(nxt)
    return rows


_STIRLING_ROWS = _build_stirling_rows(STIRLING_EXACT_MAX_N)


def stirling_first_unsigned(n: int, k: int) -> int:
    """Unsigned Stirling number of the first kind, exact.

    Returns 0 for k > n by convention. n is capped at 64; the triangle is a
    precomputed process-wide table, so lookups are O(1).
    """
    if n < 0 or k < 0:
        raise DomainError("n and k must be non-negative")
    if n > STIRLING_EXACT_MAX_N:
        raise RangeError(f"n={n} exceeds the guaranteed exact range (<= {STIRLING_EXACT_MAX_N})")
    if k > n:
        return 0
    return _STIRLING_ROWS[n][k]


@lru_cache(maxsize=None)
def stirling_first_ratio_table(nmax: int, kmax: int) -> np.ndarray:
    """Table R with R[n, j] = (unsigned Stirling first kind)[n, j] / n!.

    Computed by the normalized recurrence
        R[n+1, j] = n/(n+1) * R[n, j] + R[n, j-1]/(n+1),
    which keeps every entry in [0, 1] and is therefore stable in float64 for
    n far beyond the exact-integer range of stirling_first_unsigned.
    """
    if nmax < 0 or kmax < 0:
        raise DomainError("nmax and kmax must be non-negative")
    R = np.zeros((nmax + 1, kmax + 1))
    R[0, 0] = 1.0
    for n in range(nmax):
        R[n + 1] = R[n] * (n / (n + 1.0))
        R[n + 1, 1:] += R[n, :-1] / (n + 1.0)
    R.setflags(write=False)
    return R


def lambert_w(x: float) -> float:
    """Principal branch of the Lambert W function: w with w*e^w = x.

    Newton iteration seeded with log(1+x) clamped to [-1, inf); near the
    branch point x = -1/e the square-root expansion seeds instead, since the
    log seed converges too slowly there. The result satisfies
    |w*e^w - x| <= 1e-13 * max(1, |x|).
    """
    if x < -_INV_E:
        if x < -_INV_E - 1e-12:
            raise DomainError(f"lambert_w requires x >= -1/e, got {x}")
        return -1.0
    if x == 0.0:
        return 0.0
    if x < -0.25:
        w = -1.0 + math.sqrt(2.0 * (math.e * x + 1.0))
    else:
        w = math.log1p(x)
        if w < -1.0:
            w = -1.0
    tol = 1e-14 * max(1.0, abs(x))
    for _ in range(200):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        d = ew * (w + 1.0)
        if d <= 0.0:
            w = -1.0 + 1e-12
            continue
        w -= f / d
        if w < -1.0:
            w = -1.0
    return w


def stable_qtk(x, policy: TruncationPolicy | None = None):
    """Truncated series sum_{b=0}^{T-1} e^(-x) x^b / b! * 1/(b+1).

    This is a certified lower bound of (1 - e^(-x))/x (value 1 at x = 0):
    every dropped term is positive. Accepts scalars or arrays; increasing
    max_terms can only increase the result.
    """
    if policy is None:
        policy = DEFAULT_QTK_POLICY
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("stable_qtk requires x >= 0")
    acc = np.zeros_like(arr)
    term = np.exp(-arr)
    xmax = float(arr.max()) if arr.size else 0.0
    for beta in range(policy.max_terms):
        acc = acc + term / (beta + 1)
        term = term * (arr / (beta + 1))
        if policy.tail_tolerance > 0 and xmax < beta + 2:
            # dropped tail <= term / (1 - x/(beta+2)), geometric in x/(beta+2)
            tail = float(term.max()) / (1.0 - xmax / (beta + 2))
            if tail <= policy.tail_tolerance:
                break
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(acc)
    return acc
