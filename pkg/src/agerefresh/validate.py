"""Randomized property checks for the solver and the simulator.

Each check returns a :class:`PropertyResult`; a failing one carries the
seed that reproduces it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .mdp import (
    NEVER,
    NonThresholdPolicy,
    check_monotone,
    extract_threshold,
    never_update_cost,
    optimal_threshold,
    solve_rvi,
    threshold_cost,
)
from .model import ContentParams, RedirectionModel
from .sim import Environment, derive_rng, simulate_cycle, simulate_slots

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class PropertyResult:
    name: str
    status: str
    detail: str = ""
    seed: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        seed = "" if self.seed is None else f" (seed={self.seed})"
        return f"{self.status.upper():4} {self.name}{seed}: {self.detail}"


def random_instance(rng: np.random.Generator, max_age_cap: int = 50) -> Tuple[ContentParams, float]:
    """A random content with a nondecreasing redirection model."""
    t_max = int(rng.integers(1, max_age_cap + 1))
    if rng.random() < 0.5:
        model = RedirectionModel.exp_complement(float(rng.uniform(0.02, 2.0)))
    else:
        table = np.sort(rng.random(t_max + 1)) * rng.uniform(0.0, 1.0)
        model = RedirectionModel.from_table(table.tolist(), monotone=True)
    params = ContentParams(
        popularity=float(rng.uniform(0.0, 1.0)),
        redirect_unit_cost=float(rng.uniform(0.0, 20.0)),
        base_cost=float(rng.uniform(0.0, 50.0)),
        backhaul_cost=float(rng.uniform(0.0, 2000.0)),
        max_age=t_max,
        redirection=model,
    )
    return params, float(rng.uniform(0.0, 200.0))


@dataclass
class InstanceCheck:
    params: ContentParams
    arrival_rate: float
    rvi_cost: float
    enum_cost: float
    rvi_threshold: Optional[int]
    enum_threshold: int
    margin: float
    converged: bool
    monotone: bool

    @property
    def cost_ok(self) -> bool:
        return self.converged and abs(self.rvi_cost - self.enum_cost) <= 1e-6 * max(1.0, self.enum_cost)

    @property
    def threshold_ok(self) -> bool:
        if self.margin <= 1e-6:
            return True
        return self.rvi_threshold == self.enum_threshold


def check_instance(params: ContentParams, arrival_rate: float) -> InstanceCheck:
    """Solve one content both ways; ``rvi_threshold`` is ``None`` when the
    solver's rule is not a threshold rule."""
    sol = solve_rvi(params, arrival_rate)
    report = optimal_threshold(params, arrival_rate)
    try:
        found = extract_threshold(sol.decision_rule)
    except NonThresholdPolicy:
        found = None
    return InstanceCheck(
        params, arrival_rate, sol.average_cost, report.best_cost, found, report.best_threshold,
        report.margin(), sol.converged, check_monotone(sol),
    )


def solver_properties(seed: int, n_instances: int = 100, max_age_cap: int = 50) -> List[PropertyResult]:
    """Solver/enumeration agreement, monotone values and threshold structure."""
    equiv, non_monotone, non_threshold = [], [], []
    for i in range(n_instances):
        params, lam = random_instance(derive_rng(seed, 0, i), max_age_cap)
        chk = check_instance(params, lam)
        if not (chk.cost_ok and chk.threshold_ok):
            equiv.append(i)
        if not chk.monotone:
            non_monotone.append(i)
        if chk.rvi_threshold is None:
            non_threshold.append(i)

    def result(name, bad):
        if bad:
            return PropertyResult(name, FAIL, f"{len(bad)}/{n_instances} instances failed, first index {bad[0]}", seed)
        return PropertyResult(name, PASS, f"{n_instances} instances", seed)

    return [
        result("solver-enumeration equivalence", equiv),
        result("monotone value function", non_monotone),
        result("threshold structure", non_threshold),
    ]


def batch_mean(samples: np.ndarray, n_batches: int = 100) -> Tuple[float, float]:
    """Mean and batch-means standard error of a (possibly correlated) series."""
    samples = np.asarray(samples, dtype=float)
    usable = len(samples) - len(samples) % n_batches
    batches = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(samples.mean()), float(batches.std(ddof=1) / np.sqrt(n_batches))


def cycle_unbiasedness(
    params: ContentParams, arrival_rate: float, H: int, n_samples: int, seed: int
) -> Tuple[float, float, float]:
    """(empirical mean, standard error, exact cost) of sampled cycle costs."""
    rng = derive_rng(seed, 0, H)
    samples = np.array([simulate_cycle(H, params, arrival_rate, rng) for _ in range(n_samples)])
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n_samples)), threshold_cost(H, params, arrival_rate)


def renewal_average(
    params: ContentParams, arrival_rate: float, H: int, n_slots: int, seed: int
) -> Tuple[float, float, float]:
    """(long-run slot average, batch standard error, exact cost) for one
    threshold policy simulated slot by slot."""
    env = Environment((params,), arrival_rate)
    start = params.max_age if H == NEVER else 0
    costs = simulate_slots(env, [H], n_slots, derive_rng(seed, 0, 0), initial_ages=[start])
    mean, se = batch_mean(costs)
    exact = never_update_cost(params, arrival_rate) if H == NEVER else threshold_cost(H, params, arrival_rate)
    return mean, se, exact


def sim_properties(env: Environment, seed: int, n_samples: int = 20000) -> List[PropertyResult]:
    params = env.contents[0]
    lam = env.arrival_rate
    results = []
    bad = []
    for H in sorted({0, 1, params.max_age // 2, params.max_age}):
        mean, se, exact = cycle_unbiasedness(params, lam, H, n_samples, seed)
        if abs(mean - exact) > 3 * se + 1e-12:
            bad.append(f"H={H}: {mean:.4f} vs {exact:.4f} (se {se:.4f})")
    results.append(PropertyResult(
        "cycle cost unbiasedness", FAIL if bad else PASS, "; ".join(bad) or f"{n_samples} cycles per threshold", seed))

    best = optimal_threshold(params, lam).best_threshold
    mean, se, exact = renewal_average(params, lam, best, 100_000, seed)
    ok = abs(mean - exact) <= 3 * se + 1e-12
    results.append(PropertyResult(
        "renewal identity", PASS if ok else FAIL,
        f"threshold {best}: simulated {mean:.4f} vs exact {exact:.4f} (se {se:.4f})", seed))
    return results


def configured_properties(env: Environment) -> List[PropertyResult]:
    """Solver checks on each configured content.

    Structural checks are skipped for contents whose redirection model is
    not monotone, since nothing guarantees them there.
    """
    results = []
    for k, params in enumerate(env.contents):
        chk = check_instance(params, env.arrival_rate)
        tag = f"content {k}"
        ok = chk.cost_ok and (chk.rvi_threshold is None or chk.threshold_ok)
        results.append(PropertyResult(
            f"{tag} solver-enumeration equivalence", PASS if ok else FAIL,
            f"rvi {chk.rvi_cost!r} vs enumeration {chk.enum_cost!r}"))
        if not params.redirection.monotone:
            results.append(PropertyResult(f"{tag} monotone value function", SKIP, "redirection model not monotone"))
            results.append(PropertyResult(f"{tag} threshold structure", SKIP, "redirection model not monotone"))
            continue
        results.append(PropertyResult(f"{tag} monotone value function", PASS if chk.monotone else FAIL, ""))
        results.append(PropertyResult(
            f"{tag} threshold structure", FAIL if chk.rvi_threshold is None else PASS,
            f"threshold {chk.rvi_threshold}"))
    return results


def run_suite(env: Environment, seed: int, n_instances: int = 100) -> List[PropertyResult]:
    return configured_properties(env) + solver_properties(seed, n_instances) + sim_properties(env, seed)
