"""Random-variable descriptions, threshold solvers, and arrival sampling.

Thresholds come in two flavors. A summation threshold Xi(q) makes the
expected number of realizations above it equal q; a maximum-quantile
threshold tau makes P[max_i X_i <= tau] = alpha. Both are solved by fixed
200-step bisection so runtimes never depend on tolerances.

Randomness is counter-based (numpy Philox4x64) so that a (seed, trial)
pair reproduces bit-identical draws on every platform; see trial_rng.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, UnsupportedDistributionError, ValidationError

__all__ = [
    "Distribution",
    "Instance",
    "Arrival",
    "uniform",
    "two_point",
    "deterministic",
    "scaled_uniform",
    "xi_threshold",
    "max_quantile_threshold",
    "sample_arrivals",
    "sample_sorted_arrays",
    "rng_from_seed",
    "trial_rng",
]

_BISECT_ITERS = 200  # fixed iteration count: deterministic runtime, ~machine precision

_MASK64 = (1 << 64) - 1


def rng_from_seed(seed) -> np.random.Generator:
    """Counter-based generator (Philox4x64) keyed by an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 128) - 1)))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent per-trial generator derived from (seed, trial index).

    The 128-bit Philox key is (seed << 64) | trial, so distinct trials of the
    same run, and the same trial across runs, never share a stream.
    """
    key = ((int(seed) & _MASK64) << 64) | (int(trial) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Distribution:
    """A non-negative random variable; see the module constructors.

    kinds: uniform(lo, hi), two_point(value, p), deterministic(value),
    scaled_uniform(scale). Only the uniform kinds are continuous.
    """

    kind: str
    params: tuple[float, ...]

    @property
    def continuous(self) -> bool:
        return self.kind in ("uniform", "scaled_uniform")

    @property
    def support_hi(self) -> float:
        if self.kind == "uniform":
            return self.params[1]
        if self.kind == "scaled_uniform":
            return self.params[0]
        if self.kind == "two_point":
            return self.params[0]
        return self.params[0]  # deterministic

    @property
    def support_lo(self) -> float:
        if self.kind == "uniform":
            return self.params[0]
        if self.kind == "deterministic":
            return self.params[0]
        return 0.0

    def cdf(self, x: float) -> float:
        """Right-continuous distribution function F(x)."""
        if self.kind == "uniform":
            lo, hi = self.params
            if x < lo:
                return 0.0
            if x >= hi:
                return 1.0
            return (x - lo) / (hi - lo)
        if self.kind == "scaled_uniform":
            (s,) = self.params
            return min(max(x / s, 0.0), 1.0) if x >= 0 else 0.0
        if self.kind == "two_point":
            b, p = self.params
            if x < 0:
                return 0.0
            return 1.0 if x >= b else 1.0 - p
        (v,) = self.params  # deterministic
        return 1.0 if x >= v else 0.0

    def survival(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def sample(self, rng: np.random.Generator, size: int):
        u = rng.random(size)
        if self.kind == "uniform":
            lo, hi = self.params
            return lo + (hi - lo) * u
        if self.kind == "scaled_uniform":
            return self.params[0] * u
        if self.kind == "two_point":
            b, p = self.params
            return np.where(u < p, b, 0.0)
        return np.full(size, self.params[0])  # deterministic

    def finite_support(self) -> list[tuple[float, float]]:
        """(value, probability) pairs; only for discrete kinds."""
        if self.kind == "deterministic":
            return [(self.params[0], 1.0)]
        if self.kind == "two_point":
            b, p = self.params
            out = []
            if p < 1.0:
                out.append((0.0, 1.0 - p))
            if p > 0.0:
                out.append((b, p))
            return out
        raise UnsupportedDistributionError(f"{self.kind} has no finite support")


def uniform(lo: float, hi: float) -> Distribution:
    if lo < 0 or hi <= lo:
        raise ValidationError(f"uniform requires 0 <= lo < hi, got ({lo}, {hi})")
    return Distribution("uniform", (float(lo), float(hi)))


def two_point(value: float, p: float) -> Distribution:
    if value < 0:
        raise ValidationError("two_point value must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"two_point probability must lie in [0, 1], got {p}")
    return Distribution("two_point", (float(value), float(p)))


def deterministic(value: float) -> Distribution:
    if value < 0:
        raise ValidationError("deterministic value must be non-negative")
    return Distribution("deterministic", (float(value),))


def scaled_uniform(scale: float) -> Distribution:
    if scale <= 0:
        raise ValidationError("scale must be positive")
    return Distribution("scaled_uniform", (float(scale),))


@dataclass(frozen=True)
class Instance:
    """An ordered collection of independent members.

    Stored as (distribution, multiplicity) groups so that IID instances with
    millions of members stay O(1) in memory; member order is group order with
    each group expanded in place.
    """

    groups: tuple[tuple[Distribution, int], ...]
    iid: bool

    def __post_init__(self) -> None:
        if not self.groups or all(c == 0 for _, c in self.groups):
            raise ValidationError("an instance needs at least one member")
        if any(c < 0 for _, c in self.groups):
            raise ValidationError("negative multiplicity")
        if self.iid:
            dists = {d for d, c in self.groups if c > 0}
            if len(dists) != 1:
                raise ValidationError("iid flag requires pairwise-equal members")

    @staticmethod
    def of(*dists: Distribution) -> "Instance":
        iid = len(set(dists)) == 1
        return Instance(tuple((d, 1) for d in dists), iid)

    @staticmethod
    def iid_of(dist: Distribution, n: int) -> "Instance":
        if n < 1:
            raise ValidationError("n must be >= 1")
        return Instance(((dist, n),), True)

    @property
    def n(self) -> int:
        return sum(c for _, c in self.groups)

    @property
    def all_continuous(self) -> bool:
        return all(d.continuous for d, c in self.groups if c > 0)

    def members(self) -> Iterator[Distribution]:
        for d, c in self.groups:
            for _ in range(c):
                yield d

    def member_list(self) -> list[Distribution]:
        return list(self.members())

    def support_hi(self) -> float:
        return max(d.support_hi for d, c in self.groups if c > 0)

    def survival_sum(self, tau: float) -> float:
        return math.fsum(c * d.survival(tau) for d, c in self.groups if c > 0)

    def log_cdf_sum(self, tau: float) -> float:
        total = 0.0
        for d, c in self.groups:
            if c == 0:
                continue
            f = d.cdf(tau)
            if f <= 0.0:
                return -math.inf
            total += c * math.log(f)
        return total


@dataclass(frozen=True)
class Arrival:
    """One realized member: its index, value, and uniform arrival time."""

    index: int
    value: float
    time: float


def _require_continuous(inst: Instance) -> None:
    if not inst.all_continuous:
        raise UnsupportedDistributionError(
            "threshold solvers require continuous members; "
            "discrete instances are analyzed exactly elsewhere"
        )


def xi_threshold(inst: Instance, q: float) -> float:
    """Summation threshold: tau with sum_i P[X_i >= tau] = q.

    Bisection on [0, max support]; the survival sum is monotone decreasing,
    so 200 iterations pin tau to machine precision and the residual
    |survival_sum(tau) - q| is far below the 1e-10 contract.
    """
    _require_continuous(inst)
    if not 0 < q <= inst.n:
        raise DomainError(f"q must lie in (0, n]={inst.n}, got {q}")
    lo, hi = 0.0, inst.support_hi()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if inst.survival_sum(mid) >= q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_quantile_threshold(inst: Instance, alpha: float) -> float:
    """Maximum-quantile threshold: tau with prod_i F_i(tau) = alpha."""
    _require_continuous(inst)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    target = math.log(alpha)
    lo, hi = 0.0, inst.support_hi()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if inst.log_cdf_sum(mid) <= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sample_values(inst: Instance, rng: np.random.Generator) -> np.ndarray:
    parts = [d.sample(rng, c) for d, c in inst.groups if c > 0]
    return parts[0] if len(parts) == 1 else np.concatenate(parts)


def sample_sorted_arrays(inst: Instance, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(member indices, values, times), sorted by arrival time ascending.

    Draw order is fixed (all values in member order, then all times), so a
    given generator state always yields the same arrays.
    """
    gen = rng_from_seed(rng)
    values = _sample_values(inst, gen)
    times = gen.random(inst.n)
    order = np.argsort(times)
    return order, values[order], times[order]


def sample_arrivals(inst: Instance, rng_seed) -> list[Arrival]:
    """One value and one independent uniform(0,1) time per member, time-sorted."""
    idx, values, times = sample_sorted_arrays(inst, rng_seed)
    return [Arrival(int(i), float(v), float(t)) for i, v, t in zip(idx, values, times)]


def instance_from_dict(spec: dict) -> Instance:
    """Build an Instance from the JSON wire format {members: [...], iid: bool}."""
    members = []
    for entry in spec["members"]:
        kind = entry["kind"]
        count = int(entry.get("count", 1))
        if kind == "uniform":
            d = uniform(entry["lo"], entry["hi"])
        elif kind == "two_point":
            d = two_point(entry["value"], entry["p"])
        elif kind == "deterministic":
            d = deterministic(entry["value"])
        elif kind == "scaled_uniform":
            d = scaled_uniform(entry["scale"])
        else:
            raise ValidationError(f"unknown distribution kind {kind!r}")
        members.append((d, count))
    return Instance(tuple(members), bool(spec.get("iid", False)))


def instance_to_dict(inst: Instance) -> dict:
    members = []
    for d, c in inst.groups:
        entry: dict = {"kind": d.kind, "count": c}
        if d.kind == "uniform":
            entry["lo"], entry["hi"] = d.params
        elif d.kind == "two_point":
            entry["value"], entry["p"] = d.params
        elif d.kind == "deterministic":
            entry["value"] = d.params[0]
        else:
            entry["scale"] = d.params[0]
        members.append(entry)
    return {"members": members, "iid": inst.iid}
