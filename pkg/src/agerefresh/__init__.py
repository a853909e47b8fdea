"""Age-based cache refresh: exact MDP solution and epsilon-greedy learning."""

from .bandit import LearnerConfig, QTable, run_learner, select_action, update
from .mdp import (
    NEVER,
    NonThresholdPolicy,
    ThresholdReport,
    ValueSolution,
    bellman_backup,
    check_monotone,
    extract_threshold,
    never_update_cost,
    optimal_threshold,
    solve_rvi,
    threshold_cost,
)
from .model import (
    AgeState,
    ContentParams,
    RedirectionModel,
    RequestBatch,
    expected_cost,
    redirection_probability,
    serving_cost,
    step_age,
    total_cost,
)
from .sim import (
    Environment,
    ScheduleEvent,
    Trajectory,
    apply_schedule,
    compute_regret,
    derive_rng,
    sample_redirections,
    sample_requests,
    simulate_cycle,
    simulate_slots,
    zipf_popularity,
)

__version__ = "0.1.0"
