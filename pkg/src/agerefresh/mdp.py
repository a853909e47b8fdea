"""Exact solution of the per-content refresh MDP.

The state is the content age ``h in 0..max_age``; the action is refresh
(``d = 1``) or wait (``d = 0``). A refresh in a slot at age ``h`` pays that
slot's expected serving cost plus the backhaul cost and moves the content
to age 0; waiting moves it to ``min(h + 1, max_age)``.

Two independent routes to the optimal average cost live here: damped
relative value iteration over the full MDP (:func:`solve_rvi`) and direct
enumeration of refresh cycles (:func:`optimal_threshold`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .model import ContentParams, expected_cost_table

__all__ = [
    "NEVER",
    "NonThresholdPolicy",
    "ValueSolution",
    "ThresholdReport",
    "bellman_backup",
    "solve_rvi",
    "check_monotone",
    "extract_threshold",
    "threshold_cost",
    "never_update_cost",
    "optimal_threshold",
]

#: Threshold value standing for the policy that never refreshes.
NEVER = -1

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_SWEEPS = 10**6
DEFAULT_DAMPING = 0.5


class NonThresholdPolicy(ValueError):
    """A decision rule refreshes at some age but waits at a later one."""


@dataclass
class ValueSolution:
    values: np.ndarray
    average_cost: float
    decision_rule: np.ndarray
    iterations_used: int
    converged: bool
    span: float = float("nan")

    @property
    def threshold(self) -> int:
        return extract_threshold(self.decision_rule)


@dataclass
class ThresholdReport:
    """Average cost of every refresh threshold plus the never-refresh policy.

    ``per_threshold_cost[H]`` is the long-run cost of refreshing whenever
    the age reaches ``H``.
    """

    per_threshold_cost: np.ndarray
    never_update_cost: float
    best_threshold: int
    best_cost: float

    def margin(self) -> float:
        """Gap between the best and second-best policy costs."""
        costs = np.sort(np.append(self.per_threshold_cost, self.never_update_cost))
        if costs.size < 2:
            return float("inf")
        return float(costs[1] - costs[0])


def _check_damping(damping):
    if not 0.0 < damping <= 1.0:
        raise ValueError(f"damping must lie in (0, 1], got {damping}")


def _raw_backup(values, stay_cost, backhaul):
    wait = stay_cost[:-1] + values[1:]
    wait = np.append(wait, stay_cost[-1] + values[-1])
    refresh = stay_cost + backhaul + values[0]
    return np.minimum(refresh, wait), refresh, wait


def bellman_backup(
    values: Sequence[float],
    params: ContentParams,
    arrival_rate: float,
    damping: float = DEFAULT_DAMPING,
) -> Tuple[np.ndarray, float, float]:
    """One damped relative-value-iteration sweep.

    Returns
    -------
    new_values : ndarray
        ``(1 - damping) * values + damping * T(values)``, shifted so that
        ``new_values[0] == 0``.
    span : float
        ``max - min`` of ``new_values - values``.
    cost_estimate : float
        ``T(values)[0]``, the current estimate of the optimal average cost.
    """
    _check_damping(damping)
    values = np.asarray(values, dtype=float)
    if values.shape != (params.max_age + 1,):
        raise ValueError(f"expected {params.max_age + 1} values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("values contain non-finite entries")
    stay_cost = expected_cost_table(params, arrival_rate)
    raw, _, _ = _raw_backup(values, stay_cost, params.backhaul_cost)
    new = (1.0 - damping) * values + damping * raw
    new -= new[0]
    diff = new - values
    return new, float(diff.max() - diff.min()), float(raw[0])


def _greedy_rule(values, stay_cost, backhaul, scale):
    _, refresh, wait = _raw_backup(values, stay_cost, backhaul)
    # ties go to refreshing (the shorter cycle)
    return (refresh <= wait + 1e-10 * scale).astype(int)


def solve_rvi(
    params: ContentParams,
    arrival_rate: float,
    tolerance: float = DEFAULT_TOLERANCE,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    damping: float = DEFAULT_DAMPING,
    initial: Optional[Sequence[float]] = None,
) -> ValueSolution:
    """Relative value iteration until the sweep-to-sweep span is below
    ``tolerance``.

    Damping below 1 makes the refresh cycles aperiodic; with ``damping=1``
    deterministic cycles can make the iteration oscillate forever. A run
    that exhausts ``max_sweeps`` returns ``converged=False`` with whatever
    it had.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    _check_damping(damping)
    stay_cost = expected_cost_table(params, arrival_rate)
    backhaul = params.backhaul_cost
    n = params.max_age + 1
    values = np.zeros(n) if initial is None else np.array(initial, dtype=float)
    if values.shape != (n,) or not np.all(np.isfinite(values)):
        raise ValueError("initial values must be a finite vector over ages 0..max_age")
    values -= values[0]

    keep = 1.0 - damping
    wait = np.empty(n)
    span = float("inf")
    cost = float("nan")
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        # inlined bellman_backup
        np.add(stay_cost[:-1], values[1:], out=wait[:-1])
        wait[-1] = stay_cost[-1] + values[-1]
        raw = np.minimum(wait, stay_cost + (backhaul + values[0]))
        new = keep * values + damping * raw
        new -= new[0]
        diff = new - values
        span = diff.max() - diff.min()
        cost = raw[0]
        values = new
        sweeps += 1
        if span < tolerance:
            converged = True
            break

    scale = max(1.0, abs(cost), backhaul)
    rule = _greedy_rule(values, stay_cost, backhaul, scale)
    return ValueSolution(values, float(cost), rule, sweeps, converged, float(span))


def check_monotone(solution: ValueSolution, tolerance: Optional[float] = None) -> bool:
    """True if the value vector is nondecreasing in age, up to ``tolerance``.

    The default tolerance is relative to the largest value magnitude.
    """
    values = np.asarray(solution.values if isinstance(solution, ValueSolution) else solution, dtype=float)
    if tolerance is None:
        tolerance = 1e-8 * max(1.0, float(np.abs(values).max(initial=0.0)))
    return bool(np.all(values[1:] >= values[:-1] - tolerance))


def extract_threshold(decision_rule: Sequence[int]) -> int:
    """Smallest refresh age of a threshold rule, or ``NEVER`` if it never
    refreshes.

    Raises
    ------
    NonThresholdPolicy
        If a refresh at some age is followed by waiting at a later age.
    """
    rule = [int(d) for d in decision_rule]
    if any(d not in (0, 1) for d in rule):
        raise ValueError(f"decision rule entries must be 0 or 1: {rule}")
    if 1 not in rule:
        return NEVER
    first = rule.index(1)
    if 0 in rule[first:]:
        raise NonThresholdPolicy(f"rule refreshes at age {first} but waits later: {rule}")
    return first


def _cycle_costs(params, arrival_rate):
    stay_cost = expected_cost_table(params, arrival_rate)
    cycle_len = np.arange(1, params.max_age + 2, dtype=float)
    return (np.cumsum(stay_cost) + params.backhaul_cost) / cycle_len, stay_cost


def threshold_cost(H: int, params: ContentParams, arrival_rate: float) -> float:
    """Average cost per slot of refreshing whenever the age reaches ``H``.

    One cycle visits ages ``0..H`` and pays one backhaul cost.
    """
    if not 0 <= H <= params.max_age:
        raise ValueError(f"threshold {H} outside [0, {params.max_age}]")
    return float(_cycle_costs(params, arrival_rate)[0][H])


def never_update_cost(params: ContentParams, arrival_rate: float) -> float:
    """A content that is never refreshed sits at the age cap forever."""
    return float(expected_cost_table(params, arrival_rate)[-1])


def optimal_threshold(params: ContentParams, arrival_rate: float) -> ThresholdReport:
    costs, stay_cost = _cycle_costs(params, arrival_rate)
    never = float(stay_cost[-1])
    best = int(np.argmin(costs))  # first index on ties
    best_cost = float(costs[best])
    if never < best_cost:
        best, best_cost = NEVER, never
    return ThresholdReport(costs, never, best, best_cost)
