"""Flow-maximising meta-control in a level-structured environment with death.

Agents climb a continuous ladder of levels whose complexity rises with the
level.  Standing on a level more complex than the agent's ability risks
death.  Complexity is mined from the survival of random probe agents, and
the flow agent moves to the level whose mined complexity best matches its
ability.
"""

from .agents import (
    BaselinePolicy, MetaPolicy, ProbePolicy, Trajectory, identity_policy, make_probe,
    read_trajectory_csv, run_episode, write_trajectory_csv,
)
from .engine import Batch, simulate
from .env import (
    AgentState, AgentStatus, ComplexityKind, EnvironmentSpec, ability_at, actual_complexity,
    death_probability, initial_state, step,
)
from .errors import (
    ConfigError, ContractViolation, DomainError, EmptyCoverageError, FlowMetaError, UsageError,
)
from .flow import FlowConfig, FlowPolicy, flow_degree, search_grid, select_target_level
from .harness import (
    ExperimentConfig, TrialStats, compare, compute_return, emit_trace, episode_rng,
    mine_pipeline, pooled_se, reproduce, run_trials, sweep_alpha, trial_stats,
)
from .mining import (
    AbilityLog, ComplexityProfile, lookup, mine, profile_error, read_profile_csv,
    write_profile_csv,
)

__version__ = "0.1.0"
