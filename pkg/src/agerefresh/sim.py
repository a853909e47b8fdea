"""Stochastic request environment, refresh-cycle sampling and regret.

Random streams
--------------
All randomness comes from :class:`numpy.random.Generator` backed by
``PCG64``. The stream for a given content and replication is
``PCG64(SeedSequence(base_seed, spawn_key=(content, replication)))``
(see :func:`derive_rng`), so results do not depend on how replications
are scheduled across processes.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .model import (
    DEFAULT_ARRIVAL_RATE,
    ContentParams,
    RedirectionModel,
    RequestBatch,
)

__all__ = [
    "ScheduleEvent",
    "Environment",
    "Trajectory",
    "derive_rng",
    "zipf_popularity",
    "sample_requests",
    "sample_redirections",
    "simulate_cycle",
    "simulate_slots",
    "apply_schedule",
    "compute_regret",
]

_MUTABLE_CONTENT_FIELDS = ("popularity", "redirect_unit_cost", "base_cost", "backhaul_cost")


def derive_rng(base_seed: int, content: int = 0, replication: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(content), int(replication)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ScheduleEvent:
    """Set ``target`` to ``value`` from learning iteration ``iteration`` on.

    ``target`` is ``"arrival_rate"`` or a content field name. ``content``
    restricts a content-field change to one content; ``None`` applies it to
    all of them.
    """

    iteration: int
    target: str
    value: float
    content: Optional[int] = None


@dataclass(frozen=True)
class Environment:
    contents: tuple
    arrival_rate: float = DEFAULT_ARRIVAL_RATE
    schedule: tuple = ()

    def __post_init__(self):
        contents = tuple(self.contents)
        if not contents:
            raise ValueError("environment needs at least one content")
        object.__setattr__(self, "contents", contents)
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not (self.arrival_rate >= 0.0) or not math.isfinite(self.arrival_rate):
            raise ValueError(f"arrival_rate must be a non-negative finite real, got {self.arrival_rate}")
        total = sum(c.popularity for c in contents)
        if total > 1.0 + 1e-12:
            raise ValueError(f"popularities sum to {total} > 1")
        iterations = [e.iteration for e in self.schedule]
        if iterations != sorted(iterations):
            raise ValueError("schedule events must be sorted by iteration")
        for event in self.schedule:
            _check_event(event, len(contents))

    @property
    def change_points(self) -> Tuple[int, ...]:
        return tuple(sorted({e.iteration for e in self.schedule}))


def _check_event(event, n_contents):
    if event.target != "arrival_rate" and event.target not in _MUTABLE_CONTENT_FIELDS:
        raise ValueError(f"schedule event targets unknown field {event.target!r}")
    if event.content is not None and not 0 <= event.content < n_contents:
        raise ValueError(f"schedule event targets missing content {event.content}")
    if event.target == "arrival_rate" and event.content is not None:
        raise ValueError("arrival_rate is shared by all contents; drop the content index")


@dataclass
class Trajectory:
    """Per-iteration record of one learning run."""

    iteration: np.ndarray
    threshold: np.ndarray
    observed_cost: np.ndarray
    optimal_cost: np.ndarray
    content: int = 0
    epsilon: float = float("nan")
    seed: int = 0

    def __len__(self):
        return len(self.iteration)

    @property
    def instant_regret(self) -> np.ndarray:
        return compute_regret(self)[0]

    @property
    def avg_regret(self) -> np.ndarray:
        return compute_regret(self)[1]


def zipf_popularity(n: int, exponent: float) -> np.ndarray:
    """Truncated Zipf law over ranks ``1..n``."""
    if n < 1:
        raise ValueError("need at least one content")
    if not exponent > 0:
        raise ValueError("Zipf exponent must be positive")
    weights = np.arange(1, n + 1, dtype=float) ** -float(exponent)
    return weights / weights.sum()


def _pvals(env):
    p = np.array([c.popularity for c in env.contents], dtype=float)
    rest = max(0.0, 1.0 - p.sum())
    return np.append(p, rest)


def sample_requests(env: Environment, rng: np.random.Generator) -> RequestBatch:
    """Poisson total split multinomially over contents.

    Requests for content outside the library (when popularities sum to
    less than one) are dropped from ``per_content`` and ``total``.
    """
    total = int(rng.poisson(env.arrival_rate))
    split = rng.multinomial(total, _pvals(env))[:-1]
    return RequestBatch(int(split.sum()), tuple(int(x) for x in split))


def sample_redirections(count: int, h: int, model: RedirectionModel, rng: np.random.Generator) -> int:
    return int(rng.binomial(count, model.probability(h)))


def simulate_cycle(H: int, params: ContentParams, arrival_rate: float, rng: np.random.Generator) -> float:
    """Sampled average cost of one refresh cycle with threshold ``H``.

    The cycle covers ages ``0..H`` (``H + 1`` slots) and pays a single
    backhaul cost when it ends.
    """
    if not 0 <= H <= params.max_age:
        raise ValueError(f"threshold {H} outside [0, {params.max_age}]")
    slots = H + 1
    probs = params.redirection.probabilities(H)
    arrivals = rng.poisson(arrival_rate, size=slots)
    requests = rng.binomial(arrivals, params.popularity)
    redirected = rng.binomial(requests, probs)
    total = slots * params.base_cost + params.redirect_unit_cost * float(redirected.sum())
    return (total + params.backhaul_cost) / slots


def simulate_slots(
    env: Environment,
    thresholds: Sequence[int],
    n_slots: int,
    rng: np.random.Generator,
    initial_ages: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Per-slot total cost of all contents under independent threshold rules.

    Each content refreshes when its age reaches its own threshold
    (``NEVER`` = -1 disables refreshing). Ages start at 0 unless given.
    Returns an ``(n_slots,)`` array.
    """
    contents = env.contents
    n = len(contents)
    if len(thresholds) != n:
        raise ValueError("need one threshold per content")
    ages0 = [0] * n if initial_ages is None else list(initial_ages)

    ages = np.empty((n_slots, n), dtype=np.int64)
    decisions = np.zeros((n_slots, n), dtype=np.int64)
    for k, (params, H, h0) in enumerate(zip(contents, thresholds, ages0)):
        t_max = params.max_age
        if not 0 <= h0 <= t_max:
            raise ValueError(f"initial age {h0} outside [0, {t_max}]")
        if H >= 0:
            if H > t_max:
                raise ValueError(f"threshold {H} outside [0, {t_max}]")
            if h0 > H:
                raise ValueError(f"initial age {h0} beyond threshold {H}")
            col = (h0 + np.arange(n_slots)) % (H + 1)
            decisions[:, k] = col == H
        else:
            col = np.minimum(h0 + np.arange(n_slots), t_max)
        ages[:, k] = col

    arrivals = rng.poisson(env.arrival_rate, size=n_slots)
    requests = rng.multinomial(arrivals, _pvals(env))[:, :n]
    probs = np.empty((n_slots, n))
    for k, params in enumerate(contents):
        probs[:, k] = params.redirection.probabilities(params.max_age)[ages[:, k]]
    redirected = rng.binomial(requests, probs)

    alpha = np.array([c.redirect_unit_cost for c in contents])
    beta = np.array([c.base_cost for c in contents])
    backhaul = np.array([c.backhaul_cost for c in contents])
    return (beta + alpha * redirected + decisions * backhaul).sum(axis=1)


def apply_schedule(env: Environment, iteration: int) -> Environment:
    """Environment as seen at learning iteration ``iteration``.

    Events with ``event.iteration <= iteration`` are applied in order, so a
    later event on the same field wins.
    """
    contents = list(env.contents)
    arrival_rate = env.arrival_rate
    for event in env.schedule:
        if event.iteration > iteration:
            break
        _check_event(event, len(contents))
        if event.target == "arrival_rate":
            arrival_rate = float(event.value)
            continue
        targets = range(len(contents)) if event.content is None else [event.content]
        for k in targets:
            contents[k] = dataclasses.replace(contents[k], **{event.target: float(event.value)})
    return Environment(tuple(contents), arrival_rate, env.schedule)


def compute_regret(trajectory: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Instantaneous regret and its running mean."""
    if len(trajectory.observed_cost) == 0:
        raise ValueError("empty trajectory")
    instant = np.asarray(trajectory.observed_cost, float) - np.asarray(trajectory.optimal_cost, float)
    running = np.cumsum(instant) / np.arange(1, len(instant) + 1)
    return instant, running
