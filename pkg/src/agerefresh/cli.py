"""Command-line experiment runner.

Exit codes: 0 success, 2 usage error, 3 invalid configuration,
4 solver did not converge, 5 a property check failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from .bandit import LearnerConfig, run_learner
from .config import ConfigError, ExperimentConfig, load_config
from .mdp import NEVER, check_monotone, extract_threshold, NonThresholdPolicy, optimal_threshold, solve_rvi
from .sim import Environment, compute_regret, derive_rng
from .validate import check_instance, run_suite

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_NONCONVERGENCE = 4
EXIT_PROPERTY = 5

TRAJECTORY_COLUMNS = [
    "seed", "iteration", "content", "epsilon", "threshold",
    "observed_cost", "optimal_cost", "instant_regret", "avg_regret",
]
SWEEP_COLUMNS = ["epsilon", "iteration", "mean_avg_regret", "stderr", "n_seeds"]
ENUMERATION_COLUMNS = ["threshold", "average_cost", "is_optimal"]


def fmt(x) -> str:
    """Shortest round-trip text for a number."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _learn_task(args):
    env, config, iterations, base_seed, content, replication = args
    rng = derive_rng(base_seed, content, replication)
    traj = run_learner(env, config, iterations, rng, content=content, seed=replication)
    return traj


def _run_many(tasks: List[tuple], workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_learn_task(t) for t in tasks]
    # map preserves task order, so output never depends on scheduling
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_learn_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def cmd_solve(cfg: ExperimentConfig, out: Optional[str] = None, quiet: bool = False) -> int:
    env = cfg.build_environment()
    report = []
    status = EXIT_OK
    for k, params in enumerate(env.contents):
        sol = solve_rvi(params, env.arrival_rate)
        chk = check_instance(params, env.arrival_rate)
        try:
            threshold = extract_threshold(sol.decision_rule)
        except NonThresholdPolicy:
            threshold = None
        entry = {
            "content": k,
            "popularity": params.popularity,
            "average_cost": sol.average_cost,
            "threshold": threshold,
            "converged": sol.converged,
            "sweeps": sol.iterations_used,
            "monotone": check_monotone(sol),
            "values": sol.values.tolist(),
            "decision_rule": sol.decision_rule.tolist(),
            "enumeration_cost": chk.enum_cost,
            "enumeration_threshold": chk.enum_threshold,
            "cross_check": chk.cost_ok and chk.threshold_ok,
        }
        report.append(entry)
        if not sol.converged:
            status = EXIT_NONCONVERGENCE
        elif not entry["cross_check"] and status == EXIT_OK:
            status = EXIT_PROPERTY
        if not quiet:
            shown = "NEVER" if threshold == NEVER else threshold
            print(
                f"content {k}: threshold={shown} average_cost={sol.average_cost!r} "
                f"monotone={str(entry['monotone']).lower()} converged={str(sol.converged).lower()} "
                f"cross_check={'ok' if entry['cross_check'] else 'MISMATCH'}"
            )
    if out is not None:
        with open(out, "w") as fh:
            json.dump({"arrival_rate": env.arrival_rate, "contents": report}, fh, indent=2)
    if status == EXIT_NONCONVERGENCE:
        print("solver did not converge within the sweep budget", file=sys.stderr)
    return status


def enumeration_csv(env: Environment, content: int = 0) -> str:
    params = env.contents[content]
    rep = optimal_threshold(params, env.arrival_rate)
    rows = [(H, c, int(H == rep.best_threshold)) for H, c in enumerate(rep.per_threshold_cost)]
    rows.append((NEVER, rep.never_update_cost, int(rep.best_threshold == NEVER)))
    return _csv_text(ENUMERATION_COLUMNS, rows)


def cmd_enumerate(cfg: ExperimentConfig, out: Optional[str] = None, content: Optional[int] = None) -> int:
    env = cfg.build_environment()
    k = cfg.run.sweep_content if content is None else content
    if not 0 <= k < len(env.contents):
        raise ConfigError("--content", f"no content {k}")
    _emit(enumeration_csv(env, k), out)
    return EXIT_OK


def learn_csv(cfg: ExperimentConfig, epsilon: Optional[float] = None) -> str:
    env = cfg.build_environment()
    configs = cfg.learner.configs()
    if epsilon is not None:
        config = LearnerConfig(epsilon, cfg.learner.step_mode, cfg.learner.zeta, cfg.learner.initial_q)
    elif len(configs) == 1:
        config = configs[0]
    else:
        raise ConfigError("learner.epsilon", "learn needs a single epsilon (or pass --epsilon)")
    tasks = [
        (env, config, cfg.learner.iterations, cfg.run.base_seed, k, r)
        for r in cfg.run.replications
        for k in range(len(env.contents))
    ]
    rows = []
    for traj in _run_many(tasks, cfg.run.workers):
        instant, running = compute_regret(traj)
        for j in range(len(traj)):
            rows.append((
                traj.seed, traj.iteration[j], traj.content, traj.epsilon, traj.threshold[j],
                traj.observed_cost[j], traj.optimal_cost[j], instant[j], running[j],
            ))
    return _csv_text(TRAJECTORY_COLUMNS, rows)


def cmd_learn(cfg: ExperimentConfig, out: Optional[str] = None, epsilon: Optional[float] = None) -> int:
    _emit(learn_csv(cfg, epsilon), out)
    return EXIT_OK


def sweep_curves(cfg: ExperimentConfig) -> dict:
    """Running-average regret for every (epsilon, replication).

    Returns ``{epsilon: array of shape (n_seeds, iterations)}``.
    """
    env = cfg.build_environment()
    k = cfg.run.sweep_content
    configs = cfg.learner.configs()
    reps = cfg.run.replications
    tasks = [(env, c, cfg.learner.iterations, cfg.run.base_seed, k, r) for c in configs for r in reps]
    trajs = _run_many(tasks, cfg.run.workers)
    curves = {}
    for i, c in enumerate(configs):
        block = trajs[i * len(reps):(i + 1) * len(reps)]
        curves[c.epsilon] = np.array([compute_regret(t)[1] for t in block])
    return curves


def sweep_csv(curves: dict) -> str:
    rows = []
    for eps, regrets in curves.items():
        n = regrets.shape[0]
        mean = regrets.mean(axis=0)
        stderr = regrets.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(mean.shape, np.nan)
        for j in range(regrets.shape[1]):
            rows.append((eps, j + 1, mean[j], stderr[j], n))
    return _csv_text(SWEEP_COLUMNS, rows)


def cmd_sweep(cfg: ExperimentConfig, out: Optional[str] = None) -> int:
    _emit(sweep_csv(sweep_curves(cfg)), out)
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, seed: int, instances: int = 100, quiet: bool = False) -> int:
    results = run_suite(cfg.build_environment(), seed, instances)
    if not quiet:
        for r in results:
            print(r.line())
    failed = [r for r in results if not r.ok]
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed; replay with --seed {seed}",
              file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file (defaults reproduce the single-content setup)")
    common.add_argument("--seed", type=int, help="override run.base_seed")
    common.add_argument("--out", help="output file (default: stdout or run.output)")
    common.add_argument("--quiet", action="store_true", help="suppress the human-readable report")

    parser = argparse.ArgumentParser(prog="agerefresh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve each content's MDP by relative value iteration")
    p = sub.add_parser("enumerate", parents=[common], help="average cost of every refresh threshold")
    p.add_argument("--content", type=int, help="content index (default run.sweep_content)")
    p = sub.add_parser("learn", parents=[common], help="epsilon-greedy trajectories as CSV")
    p.add_argument("--epsilon", type=float, help="override learner.epsilon with a single value")
    sub.add_parser("sweep", parents=[common], help="seed-averaged regret curves per epsilon")
    p = sub.add_parser("validate", parents=[common], help="run the randomized property suite")
    p.add_argument("--instances", type=int, default=100, help="random solver instances (default 100)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be non-negative")
            cfg.run.base_seed = args.seed
        out = args.out if args.out is not None else cfg.run.output
        if args.command == "solve":
            return cmd_solve(cfg, out, args.quiet)
        if args.command == "enumerate":
            return cmd_enumerate(cfg, out, args.content)
        if args.command == "learn":
            return cmd_learn(cfg, out, args.epsilon)
        if args.command == "sweep":
            return cmd_sweep(cfg, out)
        return cmd_validate(cfg, cfg.run.base_seed, args.instances, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
