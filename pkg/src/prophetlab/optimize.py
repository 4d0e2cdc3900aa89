"""Derivative-free parameter search over the bound families.

The search objective is always a coarse-grid evaluation (200 points per
segment, no refinement) for speed; whatever the search returns is re-scored
by the family's full-density verifier, and the certified report of the
returned vector is never below that of the input vector. Constraint
handling is repair-based: clamp into the box, sort to restore ordering,
then evaluate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import (
    BoundReport,
    QuantileSchedule,
    RateSchedule,
    iid_curve_bound,
    secretary_blind_bound,
    top1of2_iid_mthreshold_bound,
    top1of2_three_threshold_bound,
    top1of2_two_threshold_bound,
    top1of2_two_threshold_branches,
)
from .distributions import rng_from_seed
from .errors import ValidationError
from .semionline import build_rate_matrix, semionline_best_ratio, semionline_verify

__all__ = ["SearchSpec", "AuditReport", "optimize", "perturbation_audit", "FAMILY_NAMES"]

_COARSE_GRID = 200
_IMPROVEMENT_EPS = 1e-6


@dataclass(frozen=True)
class SearchSpec:
    family: str
    dimension: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    ordering: str | None = None  # "ascending", "descending", or None
    restarts: int = 3
    budget: int = 500
    seed: int = 0
    context: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.lower) != self.dimension or len(self.upper) != self.dimension:
            raise ValidationError("box bounds must match the dimension")
        if not all(math.isfinite(x) for x in (*self.lower, *self.upper)):
            raise ValidationError("box bounds must be finite")
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValidationError("upper bounds must exceed lower bounds")
        # budget 0 means verify-only; an actual search needs room to move
        if self.budget != 0 and self.budget < 10 * self.dimension:
            raise ValidationError("budget must be 0 or >= 10 * dimension")
        if self.ordering not in (None, "ascending", "descending"):
            raise ValidationError(f"unknown ordering {self.ordering!r}")


@dataclass
class _Family:
    ordering: str | None
    repair: Callable[[np.ndarray], np.ndarray]
    objective: Callable[[np.ndarray], float]
    verify: Callable[[np.ndarray], BoundReport]


def _strictify(v: np.ndarray, descending: bool, eps: float = 1e-12) -> np.ndarray:
    out = v.copy()
    for i in range(1, len(out)):
        if descending and out[i] >= out[i - 1]:
            out[i] = out[i - 1] - eps
        if not descending and out[i] <= out[i - 1]:
            out[i] = out[i - 1] + eps
    return out


def _make_family(name: str, context: dict) -> _Family:
    if name == "iid-curve":
        def repair(v):
            return np.sort(np.clip(v, 1e-9, None))

        def objective(v):
            return iid_curve_bound(RateSchedule(tuple(v)), grid_points=_COARSE_GRID,
                                   refine=False).ratio

        def verify(v):
            return iid_curve_bound(RateSchedule(tuple(v)))
        return _Family("ascending", repair, objective, verify)

    if name == "top1of2-iid-mthreshold":
        def repair(v):
            return np.sort(np.clip(v, 1e-9, None))

        def objective(v):
            return top1of2_iid_mthreshold_bound(RateSchedule(tuple(v)),
                                                grid_points=_COARSE_GRID, refine=False).ratio

        def verify(v):
            return top1of2_iid_mthreshold_bound(RateSchedule(tuple(v)))
        return _Family("ascending", repair, objective, verify)

    if name == "secretary-blind":
        def repair(v):
            w = np.clip(v, 1e-9, 1.0 - 1e-9)
            return _strictify(np.sort(w)[::-1], descending=True)

        def to_sched(v):
            return QuantileSchedule((1.0, *[float(x) for x in v], 0.0))

        def objective(v):
            return secretary_blind_bound(to_sched(v), grid_points=_COARSE_GRID,
                                         refine=False).ratio

        def verify(v):
            return secretary_blind_bound(to_sched(v))
        return _Family("descending", repair, objective, verify)

    if name == "top1of2-two-threshold":
        def repair(v):
            w = np.clip(v, 1e-9, None)
            return _strictify(np.sort(w)[::-1], descending=True)

        def objective(v):
            return top1of2_two_threshold_bound(float(v[0]), float(v[1]))

        def verify(v):
            value = top1of2_two_threshold_bound(float(v[0]), float(v[1]))
            b1, b2, b3 = top1of2_two_threshold_branches(float(v[0]), float(v[1]))
            return BoundReport(ratio=value, defect_min=0.0, witness=None, grid_points=0,
                               refined=False, details={"branches": [b1, b2, b3]})
        return _Family("descending", repair, objective, verify)

    if name == "top1of2-three-threshold":
        def repair(v):
            w = np.clip(v, 1e-9, None)
            return _strictify(np.sort(w)[::-1], descending=True)

        def objective(v):
            return top1of2_three_threshold_bound(*map(float, v),
                                                 grid_points=_COARSE_GRID, refine=False).ratio

        def verify(v):
            return top1of2_three_threshold_bound(*map(float, v))
        return _Family("descending", repair, objective, verify)

    if name == "semionline":
        k = int(context["k"])
        p = int(context["p"])
        m = int(context["m"])
        layout = context.get("layout", "forward")
        eps = float(context.get("eps", 1.5e-4))

        def build(v):
            # per-row non-decreasing repair happens phase-wise in forward time
            vals = np.clip(np.asarray(v, dtype=float), 1e-9, None).reshape(k, p)
            if layout == "appendix":
                vals = vals[:, ::-1]
            vals = np.sort(vals, axis=1)
            if layout == "appendix":
                vals = vals[:, ::-1]
            return build_rate_matrix(vals.ravel(), k, p, m, layout=layout)

        def repair(v):
            C = build(v)
            phases = C.rates[:, ::m // p]
            if layout == "appendix":
                phases = phases[:, ::-1]
            return phases.ravel()

        def objective(v):
            ratio, _ = semionline_best_ratio(build(v), eps=10 * eps)
            return ratio

        def verify(v):
            C = build(v)
            ratio, _ = semionline_best_ratio(C, eps=eps)
            return semionline_verify(C, target=ratio, eps=eps)
        return _Family(None, repair, objective, verify)

    raise ValidationError(f"unknown family {name!r}")


FAMILY_NAMES = (
    "iid-curve", "top1of2-iid-mthreshold", "secretary-blind",
    "top1of2-two-threshold", "top1of2-three-threshold", "semionline",
)


def _nelder_mead_max(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: np.ndarray,
    budget: int,
    ) -> tuple[np.ndarray, float, int]:
    """Plain simplex ascent; returns (best point, best value, evals used)."""
    n = len(x0)
    pts = [x0.astype(float)]
    for i in range(n):
        q = x0.astype(float).copy()
        q[i] += step[i]
        pts.append(q)
    vals = [f(q) for q in pts]
    evals = len(pts)
    while evals < budget:
        order = np.argsort(vals)[::-1]  # maximizing: best first
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        centroid = np.mean(pts[:-1], axis=0)
        worst = pts[-1]
        refl = centroid + (centroid - worst)
        fr = f(refl)
        evals += 1
        if fr > vals[0]:
            exp = centroid + 2.0 * (centroid - worst)
            fe = f(exp)
            evals += 1
            if fe > fr:
                pts[-1], vals[-1] = exp, fe
            else:
                pts[-1], vals[-1] = refl, fr
        elif fr > vals[-2]:
            pts[-1], vals[-1] = refl, fr
        else:
            contr = centroid + 0.5 * (worst - centroid)
            fc = f(contr)
            evals += 1
            if fc > vals[-1]:
                pts[-1], vals[-1] = contr, fc
            else:
                for i in range(1, len(pts)):  # shrink toward the best vertex
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = f(pts[i])
                evals += len(pts) - 1
        if np.std(vals) < 1e-14:
            break
    i = int(np.argmax(vals))
    return pts[i], vals[i], evals


def optimize(spec: SearchSpec, initial) -> tuple[np.ndarray, BoundReport]:
    """Multistart simplex search with repair, certified at full density.

    The returned report always comes from the family verifier, never from
    the search's own coarse objective, and the returned vector is the input
    whenever no candidate certifies at least as high a ratio.
    """
    fam = _make_family(spec.family, spec.context)
    lower = np.asarray(spec.lower, dtype=float)
    upper = np.asarray(spec.upper, dtype=float)

    def repair(v: np.ndarray) -> np.ndarray:
        return fam.repair(np.clip(np.asarray(v, dtype=float), lower, upper))

    x0 = repair(np.asarray(initial, dtype=float))
    if x0.shape != (spec.dimension,) or not np.all(np.isfinite(x0)):
        raise ValidationError("no feasible start after repair")
    base_report = fam.verify(x0)
    if spec.budget == 0:
        return x0, base_report

    rng = rng_from_seed(spec.seed)
    scale = 0.05 * (upper - lower)
    per_restart = max(spec.budget // max(spec.restarts, 1), 2 * spec.dimension)
    best_x, best_val = x0, fam.objective(x0)
    for r in range(max(spec.restarts, 1)):
        start = x0 if r == 0 else repair(x0 + rng.uniform(-1, 1, spec.dimension) * scale)
        xr, fr, _ = _nelder_mead_max(lambda v: fam.objective(repair(v)), start, scale,
                                     per_restart)
        if fr > best_val:
            best_x, best_val = repair(xr), fr

    cand_report = fam.verify(best_x)
    if cand_report.certified and cand_report.ratio >= base_report.ratio:
        return best_x, cand_report
    return x0, base_report


@dataclass
class AuditReport:
    base_value: float
    best_gain: float
    improved: bool
    samples: int
    radius: float
    seed: int

    @property
    def is_local_max_candidate(self) -> bool:
        return not self.improved


def perturbation_audit(
    family: str,
    vector,
    radius: float,
    samples: int,
    seed: int,
    context: dict | None = None,
) -> AuditReport:
    """Sample random feasible perturbations and report any improvement.

    The base vector must already be feasible (repair must be a no-op);
    perturbations are repaired before evaluation. No improvement above 1e-6
    marks the vector as a local-maximum candidate; this is evidence, not a
    proof of local optimality.
    """
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    fam = _make_family(family, context or {})
    vec = np.asarray(vector, dtype=float)
    if not np.allclose(fam.repair(vec), vec, rtol=0, atol=1e-9):
        raise ValidationError("vector outside the feasible region")
    base = fam.objective(vec)
    rng = rng_from_seed(seed)
    best_gain = 0.0
    if radius > 0:
        for _ in range(samples):
            cand = fam.repair(vec + rng.uniform(-radius, radius, size=len(vec)))
            best_gain = max(best_gain, fam.objective(cand) - base)
    return AuditReport(
        base_value=base,
        best_gain=best_gain,
        improved=best_gain > _IMPROVEMENT_EPS,
        samples=samples if radius > 0 else 0,
        radius=radius,
        seed=seed,
    )
