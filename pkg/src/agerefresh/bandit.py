"""Epsilon-greedy learning of a content's refresh threshold.

Each arm is a threshold ``H in 0..max_age``. Pulling an arm runs one full
refresh cycle and observes its average cost, so the learner minimizes:
the greedy arm is the one with the *lowest* estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import optimal_threshold
from .sim import Environment, Trajectory, apply_schedule, simulate_cycle

__all__ = ["LearnerConfig", "QTable", "select_action", "update", "run_learner"]

STEP_MODES = ("constant", "sample-average")


@dataclass(frozen=True)
class LearnerConfig:
    epsilon: float = 0.1
    step_mode: str = "constant"
    zeta: float = 0.1
    initial_q: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.step_mode not in STEP_MODES:
            raise ValueError(f"step_mode must be one of {STEP_MODES}, got {self.step_mode!r}")
        if self.step_mode == "constant" and not 0.0 < self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in (0, 1], got {self.zeta}")
        if not math.isfinite(self.initial_q):
            raise ValueError("initial_q must be finite")


@dataclass
class QTable:
    estimates: np.ndarray
    counts: np.ndarray

    @classmethod
    def initial(cls, n_actions: int, initial_q: float = 0.0) -> "QTable":
        if n_actions < 1:
            raise ValueError("need at least one action")
        return cls(np.full(n_actions, float(initial_q)), np.zeros(n_actions, dtype=np.int64))

    def __len__(self):
        return len(self.estimates)

    @property
    def greedy(self) -> int:
        return int(np.argmin(self.estimates))


def select_action(q: QTable, config: LearnerConfig, rng: np.random.Generator) -> int:
    """Greedy (lowest estimate, first on ties) with probability
    ``1 - epsilon``, otherwise a uniform arm, which may be the greedy one."""
    if rng.random() < config.epsilon:
        return int(rng.integers(len(q)))
    return q.greedy


def update(q: QTable, H: int, cost_sample: float, config: LearnerConfig) -> QTable:
    """Move ``Q(H)`` toward ``cost_sample`` in place and return ``q``."""
    if not math.isfinite(cost_sample):
        raise ValueError(f"cost sample must be finite, got {cost_sample}")
    if not 0 <= H < len(q):
        raise ValueError(f"action {H} outside [0, {len(q) - 1}]")
    q.counts[H] += 1
    step = config.zeta if config.step_mode == "constant" else 1.0 / q.counts[H]
    q.estimates[H] += step * (cost_sample - q.estimates[H])
    return q


def run_learner(
    env: Environment,
    config: LearnerConfig,
    iterations: int,
    rng: np.random.Generator,
    content: int = 0,
    seed: int = 0,
) -> Trajectory:
    """Run epsilon-greedy for ``iterations`` refresh cycles.

    The environment's schedule is applied at each iteration, and the
    recorded optimal cost is that of the environment in force at that
    iteration.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    if not 0 <= content < len(env.contents):
        raise ValueError(f"no content {content}")
    t_max = env.contents[content].max_age
    q = QTable.initial(t_max + 1, config.initial_q)

    thresholds = np.empty(iterations, dtype=np.int64)
    observed = np.empty(iterations)
    optimal = np.empty(iterations)

    change_points = set(env.change_points)
    view = apply_schedule(env, 1)
    best = optimal_threshold(view.contents[content], view.arrival_rate).best_cost
    for i in range(1, iterations + 1):
        if i in change_points and i > 1:
            view = apply_schedule(env, i)
            best = optimal_threshold(view.contents[content], view.arrival_rate).best_cost
        params = view.contents[content]
        H = select_action(q, config, rng)
        cost = simulate_cycle(H, params, view.arrival_rate, rng)
        update(q, H, cost, config)
        thresholds[i - 1] = H
        observed[i - 1] = cost
        optimal[i - 1] = best

    return Trajectory(
        iteration=np.arange(1, iterations + 1),
        threshold=thresholds,
        observed_cost=observed,
        optimal_cost=optimal,
        content=content,
        epsilon=config.epsilon,
        seed=seed,
    )
