"""Experiment configuration: YAML file -> validated dataclasses.

Example::

    environment:
      n_contents: 1
      zipf_exponent: 1.1
      arrival_rate: 100
      alpha: 10
      beta: 0
      backhaul_cost: 500
      t_max: 20
      redirection: {variant: exp-complement, gamma: 0.4}
      schedule:
        - {iteration: 300, target: backhaul_cost, value: 400}
    learner:
      epsilon: [0.0, 0.05, 0.1]
      step_mode: constant
      zeta: 0.1
      initial_q: 0.0
      iterations: 1000
    run:
      base_seed: 0
      seed_count: 100
      workers: 1
      sweep_content: 0

Unknown keys are rejected. Any block or key may be omitted to take its
default.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, List, Optional

import yaml

from .bandit import STEP_MODES, LearnerConfig
from .model import DEFAULT_ARRIVAL_RATE, DEFAULT_GAMMA, DEFAULT_MAX_AGE, ContentParams, RedirectionModel
from .sim import Environment, ScheduleEvent, zipf_popularity

__all__ = [
    "ConfigError",
    "EnvironmentBlock",
    "LearnerBlock",
    "RunBlock",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "dump_config",
]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class EnvironmentBlock:
    n_contents: int = 1
    zipf_exponent: float = 1.1
    popularity: Optional[List[float]] = None
    arrival_rate: float = DEFAULT_ARRIVAL_RATE
    alpha: float = 10.0
    beta: float = 0.0
    backhaul_cost: float = 500.0
    t_max: int = DEFAULT_MAX_AGE
    redirection: dict = field(default_factory=lambda: {"variant": "exp-complement", "gamma": DEFAULT_GAMMA})
    schedule: List[dict] = field(default_factory=list)

    def build(self) -> Environment:
        return _build_environment(self)


@dataclass
class LearnerBlock:
    epsilon: List[float] = field(default_factory=lambda: [0.0, 0.05, 0.1])
    step_mode: str = "constant"
    zeta: float = 0.1
    initial_q: float = 0.0
    iterations: int = 1000

    def configs(self) -> List[LearnerConfig]:
        return [LearnerConfig(e, self.step_mode, self.zeta, self.initial_q) for e in self.epsilon]


@dataclass
class RunBlock:
    base_seed: int = 0
    seeds: Optional[List[int]] = None
    seed_count: int = 1
    workers: int = 1
    sweep_content: int = 0
    output: Optional[str] = None

    @property
    def replications(self) -> List[int]:
        return list(self.seeds) if self.seeds is not None else list(range(self.seed_count))


@dataclass
class ExperimentConfig:
    environment: EnvironmentBlock = field(default_factory=EnvironmentBlock)
    learner: LearnerBlock = field(default_factory=LearnerBlock)
    run: RunBlock = field(default_factory=RunBlock)

    def build_environment(self) -> Environment:
        return self.environment.build()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _redirection_model(spec: dict) -> RedirectionModel:
    path = "environment.redirection"
    if not isinstance(spec, dict):
        raise ConfigError(path, "must be a mapping")
    allowed = {"variant", "gamma", "table", "monotone"}
    for key in spec:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    variant = spec.get("variant", "exp-complement")
    try:
        if variant == "table":
            if "table" not in spec:
                raise ConfigError(f"{path}.table", "required for the table variant")
            return RedirectionModel.from_table(spec["table"], spec.get("monotone"))
        if variant in ("exp-complement", "exp-literal"):
            return RedirectionModel(variant, float(spec.get("gamma", DEFAULT_GAMMA)), monotone=spec.get("monotone"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.variant", f"unknown variant {variant!r}")


def _build_environment(block: EnvironmentBlock) -> Environment:
    model = _redirection_model(block.redirection)
    if block.popularity is not None:
        if len(block.popularity) != block.n_contents:
            raise ConfigError("environment.popularity", f"needs {block.n_contents} entries")
        pops = [float(p) for p in block.popularity]
    else:
        pops = zipf_popularity(block.n_contents, block.zipf_exponent).tolist()
    contents = []
    for k, p in enumerate(pops):
        try:
            contents.append(ContentParams(p, block.alpha, block.beta, block.backhaul_cost, block.t_max, model))
        except ValueError as exc:
            raise ConfigError(f"environment.popularity[{k}]", str(exc)) from None
    events = []
    for i, ev in enumerate(block.schedule):
        path = f"environment.schedule[{i}]"
        if not isinstance(ev, dict):
            raise ConfigError(path, "must be a mapping")
        for key in ev:
            if key not in ("iteration", "target", "value", "content"):
                raise ConfigError(f"{path}.{key}", "unknown key")
        for key in ("iteration", "target", "value"):
            if key not in ev:
                raise ConfigError(f"{path}.{key}", "required")
        events.append(ScheduleEvent(int(ev["iteration"]), str(ev["target"]), float(ev["value"]), ev.get("content")))
    try:
        return Environment(tuple(contents), block.arrival_rate, tuple(events))
    except ValueError as exc:
        raise ConfigError("environment.schedule" if events else "environment", str(exc)) from None


_SCALAR_TYPES = {
    "n_contents": int,
    "zipf_exponent": float,
    "arrival_rate": float,
    "alpha": float,
    "beta": float,
    "backhaul_cost": float,
    "t_max": int,
    "step_mode": str,
    "zeta": float,
    "initial_q": float,
    "iterations": int,
    "base_seed": int,
    "seed_count": int,
    "workers": int,
    "sweep_content": int,
}


def _coerce(path: str, key: str, value: Any):
    kind = _SCALAR_TYPES.get(key)
    if kind is None:
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _fill(cls, name: str, data: Optional[dict]):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(name, "must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{name}.{key}"
        if key not in known:
            raise ConfigError(path, "unknown key")
        kwargs[key] = _coerce(path, key, value)
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig) -> None:
    env = cfg.environment
    for key in ("arrival_rate", "alpha", "beta", "backhaul_cost"):
        if getattr(env, key) < 0:
            raise ConfigError(f"environment.{key}", "must be non-negative")
    if env.n_contents < 1:
        raise ConfigError("environment.n_contents", "must be at least 1")
    if env.zipf_exponent <= 0:
        raise ConfigError("environment.zipf_exponent", "must be positive")
    if env.t_max < 1:
        raise ConfigError("environment.t_max", "must be at least 1")
    env.build()

    learner = cfg.learner
    if isinstance(learner.epsilon, (int, float)) and not isinstance(learner.epsilon, bool):
        learner.epsilon = [float(learner.epsilon)]
    if not isinstance(learner.epsilon, list) or not learner.epsilon:
        raise ConfigError("learner.epsilon", "must be a number or a non-empty list")
    for i, eps in enumerate(learner.epsilon):
        if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not 0.0 <= eps <= 1.0:
            raise ConfigError(f"learner.epsilon[{i}]", f"must be a probability, got {eps!r}")
    learner.epsilon = [float(e) for e in learner.epsilon]
    if learner.step_mode not in STEP_MODES:
        raise ConfigError("learner.step_mode", f"must be one of {STEP_MODES}")
    if learner.step_mode == "constant" and not 0.0 < learner.zeta <= 1.0:
        raise ConfigError("learner.zeta", "must lie in (0, 1]")
    if learner.iterations < 1:
        raise ConfigError("learner.iterations", "must be at least 1")

    run = cfg.run
    if run.seeds is not None:
        if not isinstance(run.seeds, list) or not run.seeds:
            raise ConfigError("run.seeds", "must be a non-empty list of integers")
        for i, s in enumerate(run.seeds):
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise ConfigError(f"run.seeds[{i}]", f"must be a non-negative integer, got {s!r}")
    if run.seed_count < 1:
        raise ConfigError("run.seed_count", "must be at least 1")
    if run.base_seed < 0:
        raise ConfigError("run.base_seed", "must be non-negative")
    if run.workers < 1:
        raise ConfigError("run.workers", "must be at least 1")
    if not 0 <= run.sweep_content < env.n_contents:
        raise ConfigError("run.sweep_content", f"must index one of the {env.n_contents} contents")


def parse_config(data: Optional[dict]) -> ExperimentConfig:
    """Validate a parsed mapping; raises :class:`ConfigError`."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("<root>", "must be a mapping")
    for key in data:
        if key not in ("environment", "learner", "run"):
            raise ConfigError(key, "unknown key")
    cfg = ExperimentConfig(
        _fill(EnvironmentBlock, "environment", data.get("environment")),
        _fill(LearnerBlock, "learner", data.get("learner")),
        _fill(RunBlock, "run", data.get("run")),
    )
    _validate(cfg)
    return cfg


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return parse_config({})
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
