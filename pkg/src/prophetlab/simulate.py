"""Monte-Carlo engine for the stopping strategies, plus small exact oracles.

Strategies are declarative dataclasses; rate- or quantile-parameterized ones
are resolved against a concrete instance before running (thresholds realized
through the solvers in distributions). Rewards are deterministic functions
of a time-sorted arrival sample, and estimate_ratio drives independent
trials whose generators derive from (seed, trial index), so results are
bit-for-bit reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .bounds import QuantileSchedule, RateSchedule
from .distributions import (
    Arrival,
    Distribution,
    Instance,
    _sample_values,
    max_quantile_threshold,
    rng_from_seed,
    sample_sorted_arrays,
    trial_rng,
    xi_threshold,
)
from .errors import DomainError, RangeError, UnsupportedDistributionError, ValidationError
from .semionline import RateMatrix

__all__ = [
    "SingleThreshold",
    "BlindQuantile",
    "Top1ofKFixed",
    "Top1ofKRaise",
    "Top1of2Curve",
    "SemiOnlineClock",
    "LoadMin",
    "Strategy",
    "SimResult",
    "run_strategy",
    "estimate_ratio",
    "optimal_dp_discrete",
    "loadmin_run",
    "LoadMinResult",
    "record_count_trial",
    "blind_selection_probabilities",
]

_Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class SingleThreshold:
    """Accept the first value at or above a bar; exactly one of the two fields set.

    threshold is an explicit value; quantile is alpha with P[max <= bar] = alpha.
    """

    threshold: float | None = None
    quantile: float | None = None

    def __post_init__(self) -> None:
        if (self.threshold is None) == (self.quantile is None):
            raise ValidationError("set exactly one of threshold, quantile")


@dataclass(frozen=True)
class BlindQuantile:
    """Per-arrival-rank maximum-quantiles alpha_1..alpha_n."""

    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(not 0.0 < a <= 1.0 for a in self.alphas):
            raise ValidationError("rank quantiles must lie in (0, 1]")

    @staticmethod
    def from_schedule(sched: QuantileSchedule) -> "BlindQuantile":
        return BlindQuantile(sched.inner)


@dataclass(frozen=True)
class Top1ofKFixed:
    """Explicit descending thresholds with k accept slots.

    rule "increment" moves to the next threshold after every accept;
    rule "next_above" jumps to the lowest threshold above the accepted value.
    """

    thresholds: tuple[float, ...]
    slots: int
    rule: str = "increment"

    def __post_init__(self) -> None:
        if self.slots < 1 or not self.thresholds:
            raise ValidationError("need at least one slot and one threshold")
        if self.rule not in ("increment", "next_above"):
            raise ValidationError(f"unknown rule {self.rule!r}")
        if any(b > a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValidationError("thresholds must be non-increasing")


@dataclass(frozen=True)
class Top1ofKRaise:
    """Accept everything strictly above a running bar, raising it each time."""

    slots: int
    rate: float | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValidationError("slots must be >= 1")
        if (self.rate is None) == (self.threshold is None):
            raise ValidationError("set exactly one of rate, threshold")


@dataclass(frozen=True)
class Top1of2Curve:
    """Stepped first-accept thresholds by expected count, then beat-the-first."""

    schedule: RateSchedule


@dataclass(frozen=True)
class SemiOnlineClock:
    """Query-only strategy with k stepped threshold functions and a block clock."""

    rates: RateMatrix


@dataclass(frozen=True)
class LoadMin:
    """Parameters of the load-minimizing query cascade; runs via loadmin_run."""

    c: float = 2.0


Strategy = Union[
    SingleThreshold, BlindQuantile, Top1ofKFixed, Top1ofKRaise,
    Top1of2Curve, SemiOnlineClock, LoadMin,
]


@dataclass
class SimResult:
    empirical_ratio: float
    half_width: float
    trials: int
    seed: int
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Strategy resolution and per-sample rewards
# ---------------------------------------------------------------------------


class _Resolved:
    """A strategy with every threshold realized as a concrete value."""

    def __init__(self, kind: str, **kw) -> None:
        self.kind = kind
        self.__dict__.update(kw)

    def reward(self, values: np.ndarray, times: np.ndarray) -> float:
        return _REWARDS[self.kind](self, values, times)


def resolve_strategy(strategy: Strategy, inst: Instance | None) -> _Resolved:
    def need_inst() -> Instance:
        if inst is None:
            raise ValidationError("this strategy needs an instance to realize thresholds")
        return inst

    if isinstance(strategy, SingleThreshold):
        if strategy.threshold is not None:
            tau = strategy.threshold
        else:
            tau = max_quantile_threshold(need_inst(), strategy.quantile)
        return _Resolved("single", tau=tau)
    if isinstance(strategy, BlindQuantile):
        ii = need_inst()
        if len(strategy.alphas) != ii.n:
            raise ValidationError("need one quantile per member")
        taus = np.array([
            math.inf if a >= 1.0 else max_quantile_threshold(ii, a) for a in strategy.alphas
        ])
        return _Resolved("blind", taus=taus)
    if isinstance(strategy, Top1ofKFixed):
        return _Resolved("fixed", thr=np.asarray(strategy.thresholds, dtype=float),
                         slots=strategy.slots, rule=strategy.rule)
    if isinstance(strategy, Top1ofKRaise):
        tau = strategy.threshold if strategy.threshold is not None \
            else xi_threshold(need_inst(), strategy.rate)
        return _Resolved("raise", tau=tau, slots=strategy.slots)
    if isinstance(strategy, Top1of2Curve):
        ii = need_inst()
        sched = strategy.schedule
        sched.require_ascending()
        thr = np.array([xi_threshold(ii, c) for c in sched.steps])
        return _Resolved("curve", thr=thr, m=sched.m)
    if isinstance(strategy, SemiOnlineClock):
        ii = need_inst()
        C = strategy.rates
        qcap = float(ii.n)
        thr = np.array([
            [xi_threshold(ii, min(C.rates[j, i], qcap)) for i in range(C.m)]
            for j in range(C.k)
        ])
        return _Resolved("semionline", thr=thr, m=C.m, k=C.k)
    if isinstance(strategy, LoadMin):
        raise ValidationError("LoadMin runs through loadmin_run, not run_strategy")
    raise ValidationError(f"unknown strategy {strategy!r}")


def _reward_single(rs, values, times) -> float:
    hits = np.flatnonzero(values >= rs.tau)
    return float(values[hits[0]]) if hits.size else 0.0


def _reward_blind(rs, values, times) -> float:
    hits = np.flatnonzero(values >= rs.taus[: len(values)])
    return float(values[hits[0]]) if hits.size else 0.0


def _reward_fixed(rs, values, times) -> float:
    r, used, best, i = 0, 0, 0.0, 0
    nthr = len(rs.thr)
    while used < rs.slots:
        hits = np.flatnonzero(values[i:] >= rs.thr[r])
        if hits.size == 0:
            break
        i += int(hits[0])
        v = float(values[i])
        best = max(best, v)
        used += 1
        if rs.rule == "increment":
            r = min(r + 1, nthr - 1)
        else:
            above = np.flatnonzero(rs.thr > v)
            r = int(above[-1]) if above.size else nthr - 1
        i += 1
    return best


def _reward_raise(rs, values, times) -> float:
    bar, used, i, got = rs.tau, 0, 0, False
    while used < rs.slots:
        hits = np.flatnonzero(values[i:] > bar)
        if hits.size == 0:
            break
        i += int(hits[0])
        bar = float(values[i])
        got = True
        used += 1
        i += 1
    return bar if got else 0.0


def _reward_curve(rs, values, times) -> float:
    block = np.minimum((times * rs.m).astype(int), rs.m - 1)
    hits = np.flatnonzero(values > rs.thr[block])
    if hits.size == 0:
        return 0.0
    i1 = int(hits[0])
    later = np.flatnonzero(values[i1 + 1:] > values[i1])
    return float(values[i1 + 1 + later[0]]) if later.size else float(values[i1])


def _reward_semionline(rs, values, times) -> float:
    block = np.minimum((times * rs.m).astype(int), rs.m - 1)
    r, clock, start, last = 0, 0.0, 0, -1
    while r < rs.k:
        ok = (times[start:] >= clock) & (values[start:] >= rs.thr[r][block[start:]])
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            break
        i = start + int(hits[0])
        last = i
        r += 1
        clock = math.ceil(times[i] * rs.m) / rs.m
        start = i + 1
    return float(values[last]) if last >= 0 else 0.0


_REWARDS = {
    "single": _reward_single,
    "blind": _reward_blind,
    "fixed": _reward_fixed,
    "raise": _reward_raise,
    "curve": _reward_curve,
    "semionline": _reward_semionline,
}


def run_strategy(strategy, arrivals, inst: Instance | None = None) -> float:
    """Deterministic reward of a strategy on a time-sorted arrival list.

    Accepts either a list of Arrival records or a (values, times) pair of
    arrays; a reward of 0 means nothing was accepted. Pre-resolved strategies
    (from resolve_strategy) are also accepted directly.
    """
    if isinstance(arrivals, tuple):
        values, times = np.asarray(arrivals[0], float), np.asarray(arrivals[1], float)
    else:
        values = np.array([a.value for a in arrivals])
        times = np.array([a.time for a in arrivals])
    if np.any(np.diff(times) < 0):
        raise ValidationError("arrivals must be sorted by time")
    rs = strategy if isinstance(strategy, _Resolved) else resolve_strategy(strategy, inst)
    return rs.reward(values, times)


def estimate_ratio(inst: Instance, strategy: Strategy, trials: int, seed: int) -> SimResult:
    """Estimate E[ALG]/E[max] over independent trials with a 99% CI.

    The ratio is of per-trial sums over identical arrival samples; the
    half-width comes from the delta method for a ratio of means. Trial t
    draws from trial_rng(seed, t), so the result is reproducible and
    independent of any batching.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rs = resolve_strategy(strategy, inst)
    alg = np.empty(trials)
    top = np.empty(trials)
    for t in range(trials):
        _, values, times = sample_sorted_arrays(inst, trial_rng(seed, t))
        alg[t] = rs.reward(values, times)
        top[t] = values.max()
    ratio = float(alg.sum() / top.sum())
    if trials > 1:
        ma, mz = alg.mean(), top.mean()
        va = alg.var(ddof=1)
        vz = top.var(ddof=1)
        caz = float(np.cov(alg, top, ddof=1)[0, 1])
        var_r = (va - 2.0 * ratio * caz + ratio * ratio * vz) / (trials * mz * mz)
        half = _Z99 * math.sqrt(max(var_r, 0.0))
    else:
        half = math.inf
    return SimResult(
        empirical_ratio=ratio,
        half_width=half,
        trials=trials,
        seed=seed,
        extra={
            "mean_alg": float(alg.mean()),
            "mean_prophet": float(top.mean()),
            "accept_rate": float(np.mean(alg > 0)),
        },
    )


def blind_selection_probabilities(
    inst: Instance, alphas: Sequence[float], ks: Sequence[int], trials: int, seed: int,
) -> dict[int, tuple[float, float]]:
    """Empirical P[T <= k] of the per-rank quantile strategy, with binomial sigma."""
    rs = resolve_strategy(BlindQuantile(tuple(alphas)), inst)
    counts = {k: 0 for k in ks}
    for t in range(trials):
        _, values, times = sample_sorted_arrays(inst, trial_rng(seed, t))
        hits = np.flatnonzero(values >= rs.taus)
        sel = int(hits[0]) + 1 if hits.size else math.inf
        for k in ks:
            if sel <= k:
                counts[k] += 1
    out = {}
    for k in ks:
        p = counts[k] / trials
        out[k] = (p, math.sqrt(p * (1.0 - p) / trials))
    return out


# ---------------------------------------------------------------------------
# Exact backward-induction oracle for small discrete instances
# ---------------------------------------------------------------------------


def optimal_dp_discrete(members: Sequence[Distribution], slots: int) -> float:
    """Optimal expected final-max over all accept-up-to-k policies.

    Exact backward induction over (index, best value held, slots left);
    members must have finite support (two_point or deterministic) and there
    can be at most 20 of them.
    """
    if slots < 1:
        raise DomainError("slots must be >= 1")
    if len(members) > 20:
        raise RangeError("at most 20 members supported")
    supports = [d.finite_support() for d in members]
    n = len(members)

    @lru_cache(maxsize=None)
    def value(i: int, best: float, s: int) -> float:
        if i == n:
            return best
        total = 0.0
        for v, p in supports[i]:
            keep = value(i + 1, best, s)
            if s > 0:
                keep = max(keep, value(i + 1, max(best, v), s - 1))
            total += p * keep
        return total

    out = value(0, 0.0, slots)
    value.cache_clear()
    return out


# ---------------------------------------------------------------------------
# Load-minimizing query cascade
# ---------------------------------------------------------------------------


@dataclass
class LoadMinResult:
    value: float
    true_max: float
    max_load: int
    total_queries: int
    success: bool
    rounds: int


def _interval_bounds(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    los, his = [], []
    for d, cnt in inst.groups:
        if d.kind not in ("uniform", "scaled_uniform"):
            raise UnsupportedDistributionError(
                "load minimization needs interval-conditionable members (uniform family)"
            )
        los.append(np.full(cnt, d.support_lo))
        his.append(np.full(cnt, d.support_hi))
    return np.concatenate(los), np.concatenate(his)


def _iterated_log_rates(n: int, c: float) -> list[float]:
    # c * log^(t) n for t = 1 .. log*(n)
    out = []
    x = math.log(n)
    while x > 0:
        out.append(c * x)
        if x <= 1.0:
            break
        x = math.log(x)
    return out


def _duel(a: int, b: int, values, lo, hi, load, cap: int) -> int:
    """Which of a, b holds the larger value, by conditional-median queries.

    Each round queries both at the conditional median of a (the midpoint of
    its interval, members being uniform); differing answers decide. Equal
    answers shrink the knowledge intervals and the round repeats; ties are
    impossible for continuous members, so the cap only guards float-width
    exhaustion.
    """
    for _ in range(cap):
        tau = 0.5 * (lo[a] + hi[a])
        qa = values[a] >= tau
        qb = values[b] >= tau
        load[a] += 1
        load[b] += 1
        if qa:
            lo[a] = tau
        else:
            hi[a] = tau
        if qb:
            lo[b] = max(lo[b], tau)
        else:
            hi[b] = min(hi[b], tau)
        if qa != qb:
            return a if qa else b
    return a if lo[a] + hi[a] >= lo[b] + hi[b] else b


def loadmin_run(inst: Instance, seed: int, c: float = 2.0, duel_cap: int = 60) -> LoadMinResult:
    """One run of the low-load maximum-finding pipeline.

    Discard ceil(sqrt(n)) members chosen uniformly; run the iterated-log
    threshold cascade on the survivors, keeping only yes-answers each round;
    when a round comes back all-no (or rounds run out), finish with a
    champion-vs-challenger duel tournament on the remaining candidates.
    Success means the returned realized value is the true maximum of all n.
    """
    n = inst.n
    rng = rng_from_seed(seed)
    values = _sample_values(inst, rng)
    lo, hi = _interval_bounds(inst)
    true_max = float(values.max())
    load = np.zeros(n, dtype=np.int64)

    n_disc = min(math.ceil(math.sqrt(n)), n - 1)
    alive = np.ones(n, dtype=bool)
    if n_disc:
        alive[rng.choice(n, size=n_disc, replace=False)] = False
    survivors = np.flatnonzero(alive)

    if inst.iid:
        surv_inst = Instance.iid_of(inst.groups[0][0], len(survivors))
    else:
        members = inst.member_list()
        surv_inst = Instance.of(*[members[i] for i in survivors])

    rates = _iterated_log_rates(n, c)
    active = survivors
    for q in rates:
        tau = xi_threshold(surv_inst, min(q, len(survivors)))
        ans = values[active] >= tau
        load[active] += 1
        yes = active[ans]
        no = active[~ans]
        lo[yes] = np.maximum(lo[yes], tau)
        hi[no] = np.minimum(hi[no], tau)
        if yes.size == 0:
            break  # every candidate sits below tau; duel the entering set
        active = yes

    cands = [int(i) for i in active]
    if len(cands) == 1:
        champ = cands[0]
        load[champ] += 1  # single confirmation probe
    else:
        champ = cands[0]
        for ch in cands[1:]:
            champ = _duel(champ, ch, values, lo, hi, load, duel_cap)

    value = float(values[champ])
    return LoadMinResult(
        value=value,
        true_max=true_max,
        max_load=int(load.max()),
        total_queries=int(load.sum()),
        success=value == true_max,
        rounds=len(rates),
    )


def record_count_trial(points: int, seed: int) -> int:
    """Count of right-to-left maxima among `points` iid uniform values."""
    if points < 0:
        raise DomainError("points must be >= 0")
    if points == 0:
        return 0
    u = rng_from_seed(seed).random(points)
    acc = np.maximum.accumulate(u[::-1])
    return 1 + int(np.count_nonzero(acc[1:] > acc[:-1]))
