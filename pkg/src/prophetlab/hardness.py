"""Exact analysis of the four-variable accept-up-to-two hardness instance.

The instance has X_i = b_i with probability p_i and 0 otherwise, with
b_i = c_i * beta for i <= 3, b_4 = 1, p_1 = 1, p_4 = c_4 * beta. Only six
stopping policies are undominated; their expected values admit closed forms,
and the beta -> 0 limits of E[A_i]/E[Z] are rational in the parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, deterministic, two_point
from .errors import DomainError, ValidationError

__all__ = [
    "HardnessParams",
    "PUBLISHED_HARDNESS_PARAMS",
    "hardness_expected_values",
    "hardness_limit_ratios",
    "hardness_instance_members",
]


@dataclass(frozen=True)
class HardnessParams:
    c1: float
    c2: float
    c3: float
    c4: float
    p2: float
    p3: float

    def __post_init__(self) -> None:
        if any(c <= 0 for c in (self.c1, self.c2, self.c3, self.c4)):
            raise ValidationError("scale parameters must be positive")
        if not (0.0 <= self.p2 <= 1.0 and 0.0 <= self.p3 <= 1.0):
            raise ValidationError("probabilities must lie in [0, 1]")


PUBLISHED_HARDNESS_PARAMS = HardnessParams(
    c1=1.0, c2=2.04632458, c3=2.9369093, c4=0.8905847, p2=0.4466646, p3=0.1487470,
)


def _validate_beta(params: HardnessParams, beta: float) -> None:
    if beta <= 0:
        raise DomainError("beta must be positive")
    b = (params.c1 * beta, params.c2 * beta, params.c3 * beta, 1.0)
    if not (b[0] < b[1] < b[2] < b[3]):
        raise ValidationError(f"value ordering b1 < b2 < b3 < b4 fails at beta={beta}")
    if params.c4 * beta > 1.0:
        raise ValidationError("p4 = c4*beta must be a probability")


def hardness_instance_members(params: HardnessParams, beta: float) -> list[Distribution]:
    """The four members at a concrete beta, in arrival order."""
    _validate_beta(params, beta)
    return [
        deterministic(params.c1 * beta),
        two_point(params.c2 * beta, params.p2),
        two_point(params.c3 * beta, params.p3),
        two_point(1.0, params.c4 * beta),
    ]


def hardness_expected_values(params: HardnessParams, beta: float) -> tuple[np.ndarray, float]:
    """Expected rewards (E[A_1..A_6], E[Z]) at a concrete beta.

    A_1..A_3 take X_1 and then wait from X_2/X_3/X_4 for the next nonzero
    value; A_4 saves both slots for X_3, X_4; A_5 and A_6 skip X_1 and play
    the analogous policies from X_2 on.
    """
    _validate_beta(params, beta)
    b1, b2, b3 = params.c1 * beta, params.c2 * beta, params.c3 * beta
    b4 = 1.0
    p2, p3, p4 = params.p2, params.p3, params.c4 * beta

    a1 = p2 * b2 + (1 - p2) * p3 * b3 + (1 - p2) * (1 - p3) * p4 * b4 \
        + (1 - p2) * (1 - p3) * (1 - p4) * b1
    a2 = p3 * b3 + (1 - p3) * p4 * b4 + (1 - p3) * (1 - p4) * b1
    a3 = p4 * b4 + (1 - p4) * b1
    a4 = p4 * b4 + (1 - p4) * p3 * b3
    a5 = p2 * (p3 * b3 + (1 - p3) * p4 * b4 + (1 - p3) * (1 - p4) * b2) + (1 - p2) * a4
    a6 = p2 * (p4 * b4 + (1 - p4) * b2) + (1 - p2) * a4

    probs = (1.0, p2, p3, p4)
    values = (b1, b2, b3, b4)
    ez = 0.0
    for i in range(4):
        tail = 1.0
        for j in range(i + 1, 4):
            tail *= 1.0 - probs[j]
        ez += tail * probs[i] * values[i]
    return np.array([a1, a2, a3, a4, a5, a6]), ez


def hardness_limit_ratios(params: HardnessParams) -> np.ndarray:
    """The six beta -> 0 limits of E[A_i]/E[Z], evaluated exactly."""
    c1, c2, c3, c4 = params.c1, params.c2, params.c3, params.c4
    p2, p3 = params.p2, params.p3
    denom = c1 * (p2 - 1) * (p3 - 1) - c2 * p2 * (p3 - 1) + c3 * p3 + c4
    if denom == 0:
        raise DomainError("degenerate instance: limit denominator vanishes")
    nums = np.array([
        (c2 - c4) * p2 + c1 * (p2 - 1) * (p3 - 1) + (c4 - c3) * (p2 - 1) * p3 + c4,
        -(c1 - c3 + c4) * p3 + c1 + c4,
        c1 + c4,
        c3 * p3 + c4,
        c2 * p2 + p3 * (c3 - (c2 + c4) * p2) + c4,
        c2 * p2 - c3 * (p2 - 1) * p3 + c4,
    ])
    return nums / denom
