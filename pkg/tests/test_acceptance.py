"""Exit criteria. Each test logs one PASS/FAIL line, shown in the
terminal summary under "acceptance criteria"."""
import csv
import time

import numpy as np
import pytest
import yaml

from agerefresh.cli import cmd_enumerate, main, sweep_curves
from agerefresh.config import parse_config
from agerefresh.mdp import NEVER, optimal_threshold
from agerefresh.model import ContentParams
from agerefresh.sim import Environment, derive_rng, simulate_slots, zipf_popularity
from agerefresh.validate import batch_mean, check_instance, cycle_unbiasedness, random_instance

import oracles

SOLVER_SEED = 2024
N_INSTANCES = 100
N_SEEDS = 100
ITERATIONS = 1000


def record(log, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    log.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def solver_run():
    start = time.perf_counter()
    checks = [check_instance(*random_instance(derive_rng(SOLVER_SEED, 0, i))) for i in range(N_INSTANCES)]
    return checks, time.perf_counter() - start


def test_1_solver_enumeration_equivalence(solver_run, acceptance_log):
    checks, elapsed = solver_run
    worst = max(abs(c.rvi_cost - c.enum_cost) / max(1.0, c.enum_cost) for c in checks)
    compared = sum(c.margin > 1e-6 for c in checks)
    bad = [i for i, c in enumerate(checks) if not (c.cost_ok and c.threshold_ok)]
    ok = not bad and elapsed < 10.0
    record(acceptance_log, 1, ok,
           f"{N_INSTANCES} instances, worst relative gap {worst:.2e} (tol 1e-6), "
           f"thresholds compared on {compared}, mismatches {bad}, {elapsed:.2f}s (< 10s)")
    assert ok


def test_2_value_function_monotone(solver_run, acceptance_log):
    checks, _ = solver_run
    bad = [i for i, c in enumerate(checks) if not c.monotone]
    ok = not bad
    record(acceptance_log, 2, ok, f"check_monotone on {N_INSTANCES} instances, failures {bad}")
    assert ok


def test_3_threshold_structure(solver_run, acceptance_log):
    checks, _ = solver_run
    bad = [i for i, c in enumerate(checks) if c.rvi_threshold is None]
    ok = not bad
    record(acceptance_log, 3, ok, f"extract_threshold on {N_INSTANCES} instances, NonThresholdPolicy raised on {bad}")
    assert ok


def test_4_enumeration_fixture(tmp_path, acceptance_log):
    out = tmp_path / "enum.csv"
    start = time.perf_counter()
    code = cmd_enumerate(parse_config({}), str(out))
    elapsed = time.perf_counter() - start
    rows = list(csv.DictReader(out.open()))
    finite = rows[:-1]
    costs = [float(r["average_cost"]) for r in finite]
    optimal = [r for r in rows if r["is_optimal"] == "1"]
    ok = (
        code == 0
        and finite[0]["average_cost"] == "500.0"
        and np.allclose(costs, oracles.REF_TABLE, rtol=1e-12, atol=0)
        and abs(float(rows[-1]["average_cost"]) - oracles.REF_NEVER) <= 1e-12 * oracles.REF_NEVER
        and len(optimal) == 1
        and int(optimal[0]["threshold"]) == oracles.REF_BEST_THRESHOLD
        and abs(float(optimal[0]["average_cost"]) - oracles.REF_BEST_COST) <= 1e-12 * oracles.REF_BEST_COST
        and elapsed < 1.0
    )
    record(acceptance_log, 4, ok,
           f"H=0 cost {finite[0]['average_cost']}, argmin H={optimal[0]['threshold'] if optimal else None} "
           f"cost {optimal[0]['average_cost'] if optimal else None} (oracle H=1, 414.83997698218035), {elapsed:.3f}s (< 1s)")
    assert ok


def test_5_cycle_sampling_unbiased(acceptance_log):
    params = ContentParams()
    start = time.perf_counter()
    parts, ok = [], True
    for H in (0, 1, 5):
        mean, se, exact = cycle_unbiasedness(params, 100.0, H, 100_000, seed=5)
        # H=0 never redirects (P(0)=0), so every sample is exactly E and se is 0
        within = abs(mean - exact) <= 3.0 * se
        ok &= within
        spread = f"{abs(mean - exact) / se:.2f} se" if se > 0 else "zero variance, exact"
        parts.append(f"H={H}: {mean:.3f} vs {exact:.3f} ({spread})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    record(acceptance_log, 5, ok, "; ".join(parts) + f", {elapsed:.1f}s (< 30s)")
    assert ok


def _sweep_config(schedule):
    return parse_config({
        "environment": {"schedule": schedule},
        "learner": {"epsilon": [0.0, 0.05, 0.1], "step_mode": "constant", "zeta": 0.1,
                    "initial_q": 0.0, "iterations": ITERATIONS},
        "run": {"base_seed": 0, "seed_count": N_SEEDS},
    })


@pytest.fixture(scope="module")
def stationary_curves():
    start = time.perf_counter()
    curves = sweep_curves(_sweep_config([]))
    return {eps: c.mean(axis=0) for eps, c in curves.items()}, time.perf_counter() - start


@pytest.fixture(scope="module")
def nonstationary_curves():
    start = time.perf_counter()
    curves = sweep_curves(_sweep_config([{"iteration": 300, "target": "backhaul_cost", "value": 400.0}]))
    return {eps: c.mean(axis=0) for eps, c in curves.items()}, time.perf_counter() - start


def test_6_stationary_regret(stationary_curves, acceptance_log):
    curves, elapsed = stationary_curves
    at = {eps: (m[99], m[ITERATIONS - 1]) for eps, m in curves.items()}
    ordered = at[0.0][1] <= at[0.05][1] <= at[0.1][1]
    decreasing = all(end < early for early, end in at.values())
    ok = ordered and decreasing and elapsed < 120.0
    detail = ", ".join(f"eps={e}: {a:.2f}@100 -> {b:.2f}@1000" for e, (a, b) in at.items())
    record(acceptance_log, 6, ok, f"{detail}; order eps0<=0.05<=0.1 {ordered}, all decreasing {decreasing}, {elapsed:.1f}s")
    assert ok


def test_7_nonstationary_regret(nonstationary_curves, acceptance_log):
    curves, elapsed = nonstationary_curves
    late = {eps: float(m[599:ITERATIONS].mean()) for eps, m in curves.items()}
    drop = {eps: float(m[299] - m[599]) for eps, m in curves.items()}
    greedy_worst = late[0.0] > late[0.05] and late[0.0] > late[0.1]
    faster = drop[0.1] > drop[0.05]
    ok = greedy_worst and faster and elapsed < 120.0
    record(acceptance_log, 7, ok,
           "mean avg regret over 600-1000: " + ", ".join(f"eps={e}: {v:.2f}" for e, v in late.items())
           + f" (eps=0 above both: {greedy_worst}); drop 300->600: "
           + ", ".join(f"eps={e}: {v:.2f}" for e, v in drop.items())
           + f" (eps=0.1 faster than 0.05: {faster}); {elapsed:.1f}s")
    assert ok


def test_8_separability(acceptance_log):
    start = time.perf_counter()
    contents = tuple(ContentParams(popularity=float(p)) for p in zipf_popularity(5, 1.1))
    env = Environment(contents, 100.0)
    reports = [optimal_threshold(c, env.arrival_rate) for c in contents]
    thresholds = [r.best_threshold for r in reports]
    starts = [c.max_age if H == NEVER else 0 for c, H in zip(contents, thresholds)]
    costs = simulate_slots(env, thresholds, 100_000, derive_rng(8), initial_ages=starts)
    mean, se = batch_mean(costs)
    exact = sum(r.best_cost for r in reports)
    elapsed = time.perf_counter() - start
    z = abs(mean - exact) / se
    ok = z <= 3.0 and elapsed < 60.0
    record(acceptance_log, 8, ok,
           f"thresholds {thresholds}, joint {mean:.3f} vs sum {exact:.3f} ({z:.2f} se), {elapsed:.2f}s")
    assert ok


def test_9_learn_determinism(tmp_path, acceptance_log):
    start = time.perf_counter()
    outputs = []
    for i, workers in enumerate((1, 1, 2)):
        cfg = tmp_path / f"cfg{i}.yaml"
        cfg.write_text(yaml.safe_dump({
            "environment": {"n_contents": 2},
            "learner": {"epsilon": 0.1, "iterations": 200},
            "run": {"seed_count": 4, "workers": workers},
        }))
        out = tmp_path / f"out{i}.csv"
        assert main(["learn", "--config", str(cfg), "--seed", "123", "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    elapsed = time.perf_counter() - start
    ok = outputs[0] == outputs[1] == outputs[2] and elapsed < 10.0
    record(acceptance_log, 9, ok, f"serial/serial/parallel CSVs byte-identical: {ok}, {len(outputs[0])} bytes, {elapsed:.2f}s")
    assert ok
