"""Domain types and cost arithmetic for a single small-cell cache.

Every content in the cache ages by one slot per time step until it is
refreshed (age resets to zero) or reaches its obsolescence cap. Users who
are unhappy with the age of what they receive are redirected to the macro
cell, which costs ``redirect_unit_cost`` per user.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "RedirectionModel",
    "ContentParams",
    "RequestBatch",
    "AgeState",
    "step_age",
    "serving_cost",
    "total_cost",
    "redirection_probability",
    "expected_cost",
    "expected_cost_table",
    "DEFAULT_ARRIVAL_RATE",
    "DEFAULT_GAMMA",
    "DEFAULT_MAX_AGE",
]

DEFAULT_GAMMA = 0.4
DEFAULT_MAX_AGE = 20
DEFAULT_ARRIVAL_RATE = 100.0

_VARIANTS = ("exp-complement", "exp-literal", "table")


@dataclass(frozen=True)
class RedirectionModel:
    """Map from content age to the probability that a user is redirected.

    Use the ``exp_complement``, ``exp_literal`` and ``from_table``
    constructors rather than the raw initializer.

    ``monotone`` records whether ``P(h + 1) >= P(h)`` holds. It is derived
    for the exponential variants; for tables it is checked when requested
    and auto-detected when left as ``None``.
    """

    variant: str
    gamma: float = DEFAULT_GAMMA
    table: Optional[tuple] = None
    monotone: Optional[bool] = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown redirection variant {self.variant!r}")
        if self.variant == "table":
            if not self.table:
                raise ValueError("table redirection model needs at least one entry")
            probs = tuple(float(x) for x in self.table)
            for h, prob in enumerate(probs):
                if not (0.0 <= prob <= 1.0) or math.isnan(prob):
                    raise ValueError(f"table entry for age {h} is not a probability: {prob}")
            object.__setattr__(self, "table", probs)
            increasing = all(b >= a for a, b in zip(probs, probs[1:]))
            if self.monotone is None:
                object.__setattr__(self, "monotone", increasing)
            elif self.monotone and not increasing:
                raise ValueError("table flagged monotone but P(h+1) < P(h) somewhere")
        else:
            if not (self.gamma > 0.0) or not math.isfinite(self.gamma):
                raise ValueError(f"gamma must be a positive finite real, got {self.gamma}")
            natural = self.variant == "exp-complement"
            if self.monotone is None:
                object.__setattr__(self, "monotone", natural)
            elif self.monotone and not natural:
                raise ValueError("exp-literal probabilities decrease with age; cannot flag monotone")
            object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def exp_complement(cls, gamma: float = DEFAULT_GAMMA) -> "RedirectionModel":
        """``h -> 1 - exp(-gamma * h)``; nondecreasing in age."""
        return cls("exp-complement", gamma)

    @classmethod
    def exp_literal(cls, gamma: float = DEFAULT_GAMMA) -> "RedirectionModel":
        """``h -> exp(-gamma * h)``; decreasing in age, never monotone."""
        return cls("exp-literal", gamma)

    @classmethod
    def from_table(cls, probabilities: Sequence[float], monotone: Optional[bool] = None) -> "RedirectionModel":
        return cls("table", table=tuple(probabilities), monotone=monotone)

    def probability(self, h: int) -> float:
        if h < 0:
            raise ValueError(f"age must be non-negative, got {h}")
        if self.variant == "exp-complement":
            return -math.expm1(-self.gamma * h)
        if self.variant == "exp-literal":
            return math.exp(-self.gamma * h)
        if h >= len(self.table):
            raise ValueError(f"redirection table has no entry for age {h}")
        return self.table[h]

    def probabilities(self, max_age: int) -> np.ndarray:
        """Vector of probabilities for ages ``0..max_age``."""
        ages = np.arange(max_age + 1, dtype=float)
        if self.variant == "exp-complement":
            return -np.expm1(-self.gamma * ages)
        if self.variant == "exp-literal":
            return np.exp(-self.gamma * ages)
        if max_age >= len(self.table):
            raise ValueError(f"redirection table has no entry for age {len(self.table)}")
        return np.asarray(self.table[: max_age + 1], dtype=float)


@dataclass(frozen=True)
class ContentParams:
    """Popularity, cost coefficients and age cap of one cached content."""

    popularity: float = 1.0
    redirect_unit_cost: float = 10.0
    base_cost: float = 0.0
    backhaul_cost: float = 500.0
    max_age: int = DEFAULT_MAX_AGE
    redirection: RedirectionModel = field(default_factory=RedirectionModel.exp_complement)

    def __post_init__(self):
        if not (0.0 <= self.popularity <= 1.0):
            raise ValueError(f"popularity must lie in [0, 1], got {self.popularity}")
        for name in ("redirect_unit_cost", "base_cost", "backhaul_cost"):
            value = getattr(self, name)
            if not (value >= 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be a non-negative finite real, got {value}")
        if isinstance(self.max_age, bool) or int(self.max_age) != self.max_age or self.max_age < 1:
            raise ValueError(f"max_age must be a positive integer, got {self.max_age}")
        object.__setattr__(self, "max_age", int(self.max_age))
        if self.redirection.variant == "table" and len(self.redirection.table) < self.max_age + 1:
            raise ValueError(
                f"redirection table covers ages 0..{len(self.redirection.table) - 1} "
                f"but max_age is {self.max_age}"
            )


@dataclass(frozen=True)
class RequestBatch:
    """Request counts for one slot.

    ``redirected`` and ``accepted`` are ``None`` for a batch that has only
    been split across contents and not yet across satisfied/redirected.
    """

    total: int
    per_content: tuple
    redirected: Optional[tuple] = None
    accepted: Optional[tuple] = None

    def __post_init__(self):
        per_content = tuple(int(x) for x in self.per_content)
        object.__setattr__(self, "per_content", per_content)
        if self.total < 0 or any(x < 0 for x in per_content):
            raise ValueError("request counts must be non-negative")
        if sum(per_content) != self.total:
            raise ValueError(f"per-content requests sum to {sum(per_content)}, not {self.total}")
        if (self.redirected is None) != (self.accepted is None):
            raise ValueError("redirected and accepted must be given together")
        if self.redirected is not None:
            redirected = tuple(int(x) for x in self.redirected)
            accepted = tuple(int(x) for x in self.accepted)
            if not (len(redirected) == len(accepted) == len(per_content)):
                raise ValueError("request vectors have different lengths")
            for n, (r, a, k) in enumerate(zip(redirected, accepted, per_content)):
                if r < 0 or a < 0 or r + a != k:
                    raise ValueError(f"content {n}: redirected {r} + accepted {a} != requests {k}")
            object.__setattr__(self, "redirected", redirected)
            object.__setattr__(self, "accepted", accepted)


@dataclass(frozen=True)
class AgeState:
    ages: tuple
    max_age: int

    def __post_init__(self):
        ages = tuple(int(h) for h in self.ages)
        if any(h < 0 or h > self.max_age for h in ages):
            raise ValueError(f"ages must lie in [0, {self.max_age}], got {ages}")
        object.__setattr__(self, "ages", ages)

    def step(self, decisions: Sequence[int]) -> "AgeState":
        if len(decisions) != len(self.ages):
            raise ValueError("decision vector length differs from the number of contents")
        return AgeState(tuple(step_age(h, d, self.max_age) for h, d in zip(self.ages, decisions)), self.max_age)


def step_age(h: int, d: int, t_max: int) -> int:
    """Age after one slot: 0 after a refresh, otherwise ``min(h + 1, t_max)``."""
    if not 0 <= h <= t_max:
        raise ValueError(f"age {h} outside [0, {t_max}]")
    if d:
        return 0
    return min(h + 1, t_max)


def serving_cost(lambda_r: int, d: int, params: ContentParams) -> float:
    return params.base_cost + params.redirect_unit_cost * lambda_r + d * params.backhaul_cost


def total_cost(batch: RequestBatch, decisions: Sequence[int], params: Sequence[ContentParams]) -> float:
    """Slot cost summed over contents; the cost model is linear per content."""
    if batch.redirected is None:
        raise ValueError("batch has no redirection split")
    if not (len(batch.redirected) == len(decisions) == len(params)):
        raise ValueError(
            f"length mismatch: {len(batch.redirected)} redirected counts, "
            f"{len(decisions)} decisions, {len(params)} contents"
        )
    return sum(serving_cost(r, d, p) for r, d, p in zip(batch.redirected, decisions, params))


def redirection_probability(model: RedirectionModel, h: int, t_max: Optional[int] = None) -> float:
    if t_max is not None and h > t_max:
        raise ValueError(f"age {h} exceeds the cap {t_max}")
    return model.probability(h)


def expected_cost(h: int, d: int, params: ContentParams, arrival_rate: float) -> float:
    """Mean slot cost at age ``h``: ``beta + alpha*lambda*p*P(h) + d*E``."""
    if not 0 <= h <= params.max_age:
        raise ValueError(f"age {h} outside [0, {params.max_age}]")
    prob = params.redirection.probability(h)
    return (
        params.base_cost
        + params.redirect_unit_cost * arrival_rate * params.popularity * prob
        + d * params.backhaul_cost
    )


def expected_cost_table(params: ContentParams, arrival_rate: float) -> np.ndarray:
    """``expected_cost(h, 0, ...)`` for every age ``0..max_age``."""
    probs = params.redirection.probabilities(params.max_age)
    return params.base_cost + params.redirect_unit_cost * arrival_rate * params.popularity * probs

