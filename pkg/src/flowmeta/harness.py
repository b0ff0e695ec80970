"""Experiment orchestration: returns, trial batches, baseline sweeps, mining,
the flow-versus-baseline comparison and CSV output.

Random streams
--------------
Every episode owns a generator seeded with
``SeedSequence(seed, spawn_key=(stream, *key))``.  ``stream`` names the
experiment part (see the ``STREAM_*`` constants) and ``key`` ends with the
trial index, so any single episode can be replayed on its own and batches
can be split across workers without changing results.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .agents import BaselinePolicy, MetaPolicy, Trajectory, make_probe, run_episode, write_trajectory_csv
from .engine import simulate
from .env import AgentStatus, ComplexityKind, EnvironmentSpec
from .errors import ConfigError, EmptyCoverageError
from .flow import FlowConfig, FlowPolicy
from .mining import AbilityLog, ComplexityProfile, mine, write_profile_csv

STREAM_PROBE, STREAM_BASELINE, STREAM_FLOW, STREAM_TRACE, STREAM_RUN = 1, 2, 3, 4, 5
CHUNK = 1000


def episode_rng(seed: int, stream: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, *key))))


@dataclass(frozen=True)
class TrialStats:
    n_trials: int
    mean_return: float
    std_error: float


def trial_stats(returns) -> TrialStats:
    """Mean and standard error (``n - 1`` denominator); the error is 0 for one trial."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise ConfigError("need at least one return")
    se = float(np.std(r, ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
    return TrialStats(int(r.size), float(np.mean(r)), se)


def pooled_se(a: TrialStats, b: TrialStats) -> float:
    return math.hypot(a.std_error, b.std_error)


def compute_return(trajectory: Trajectory, horizon: int, level_max: float) -> float:
    """Sum of occupied levels up to the goal plus ``level_max`` for every
    remaining step to ``horizon``; zero if the goal was never reached."""
    if trajectory.terminal is not AgentStatus.GOAL:
        return 0.0
    goal = trajectory.goal_time
    return math.fsum(trajectory.levels) + level_max * (horizon - goal)


# -- configuration -----------------------------------------------------------

PRESETS = {
    "sqrt": dict(complexity_kind="sqrt", level_max=200.0, ambient_death=0.001,
                 alpha_min=0.5, alpha_max=3.0,
                 probe_slope_min=0.5, probe_slope_max=40.0,
                 probe_joint_min=1.0, probe_joint_max=200.0),
    "quadratic": dict(complexity_kind="quadratic", level_max=40.0, ambient_death=0.0001,
                      alpha_min=0.01, alpha_max=0.028,
                      probe_slope_min=0.01, probe_slope_max=1.0,
                      probe_joint_min=1.0, probe_joint_max=40.0),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; field names double as config-file keys."""

    complexity_kind: str = "sqrt"
    exponent: float = 1.0
    level_max: float = 200.0
    ambient_death: float = 0.001
    horizon: int = 4001
    ability_dim: int = 1
    probes: int = 10_000
    rho: float = 0.001
    bin_width: float = 1.0
    record_mode: str = "clear"
    probe_slope_min: float = 0.5
    probe_slope_max: float = 40.0
    probe_joint_min: float = 0.1
    probe_joint_max: float = 200.0
    probe_log_scale: bool = True
    alpha_min: float = 0.5
    alpha_max: float = 3.0
    alpha_count: int = 10
    trials_per_setting: int = 1000
    seed: int = 0
    xi: float = 0.001
    search_step: float = 0.001
    neighborhood_radius: float = math.inf

    def __post_init__(self):
        for name in ("probes", "alpha_count", "trials_per_setting"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not self.alpha_min < self.alpha_max:
            raise ConfigError("alpha_min must be below alpha_max")
        if not 0 <= self.rho < 1:
            raise ConfigError("rho must lie in [0, 1)")
        self.env_spec  # validates the environment fields
        self.flow_config

    @classmethod
    def preset(cls, env: str, **overrides) -> "ExperimentConfig":
        if env not in PRESETS:
            raise ConfigError(f"unknown environment {env!r}; choose from {sorted(PRESETS)}")
        return cls(**{**PRESETS[env], **overrides})

    @classmethod
    def load(cls, path=None, env: Optional[str] = None, **overrides) -> "ExperimentConfig":
        """Preset for ``env``, then keys from the YAML file at ``path``, then
        ``overrides``.  The file may name its environment with an ``env`` key;
        an explicit ``env`` argument wins."""
        data = {}
        if path is not None:
            try:
                with open(path) as fh:
                    data = yaml.safe_load(fh) or {}
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: expected a flat key-value mapping")
        file_env = data.pop("env", None)
        env = env or file_env or "sqrt"
        if env not in PRESETS:
            raise ConfigError(f"unknown environment {env!r}; choose from {sorted(PRESETS)}")
        return cls._build({**PRESETS[env], **data, **overrides})

    @classmethod
    def _build(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        typed = {}
        for k, v in values.items():
            kind = type(known[k].default)
            try:
                typed[k] = v if isinstance(v, kind) else kind(v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {v!r}") from exc
        return cls(**typed)

    def replace(self, **overrides) -> "ExperimentConfig":
        return self._build({**dataclasses.asdict(self), **overrides})

    @property
    def env_spec(self) -> EnvironmentSpec:
        try:
            kind = ComplexityKind(self.complexity_kind)
        except ValueError as exc:
            raise ConfigError(f"unknown complexity kind {self.complexity_kind!r}") from exc
        return EnvironmentSpec(kind, self.level_max, self.ambient_death, self.horizon,
                               self.ability_dim, self.exponent)

    @property
    def flow_config(self) -> FlowConfig:
        return FlowConfig(self.xi, self.search_step, self.neighborhood_radius)

    @property
    def alpha_sweep(self) -> tuple[float, float, int]:
        return (self.alpha_min, self.alpha_max, self.alpha_count)

    def probe_factory(self) -> Callable[[np.random.Generator], MetaPolicy]:
        slopes = (self.probe_slope_min, self.probe_slope_max)
        joints = (self.probe_joint_min, min(self.probe_joint_max, self.level_max))
        lmax, log_scale = self.level_max, self.probe_log_scale
        return lambda rng: make_probe(rng, lmax, slopes, joints, log_scale)


# -- running episodes ----------------------------------------------------------

def run_batches(spec: EnvironmentSpec, policy_factory, n: int, seed: int, stream: int,
                key: tuple = (), chunk: int = CHUNK):
    """Yield :class:`Batch` objects covering trials ``0..n-1`` in order."""
    for start in range(0, n, chunk):
        rngs = [episode_rng(seed, stream, *key, i) for i in range(start, min(n, start + chunk))]
        policies = [policy_factory(r) for r in rngs]
        uniforms = np.vstack([r.random(spec.horizon) for r in rngs])
        yield simulate(spec, policies, uniforms)


def replay_episode(spec: EnvironmentSpec, policy_factory, seed: int, stream: int,
                   *key: int) -> Trajectory:
    """Run one episode of a batch on its own through :func:`run_episode`."""
    rng = episode_rng(seed, stream, *key)
    return run_episode(spec, policy_factory(rng), rng)


def run_trials(spec: EnvironmentSpec, policy_factory, n: int, seed: int,
               stream: int = STREAM_RUN, key: tuple = ()):
    """Run ``n`` independent episodes; return their stats and returns."""
    if n < 1:
        raise ConfigError("need at least one trial")
    returns = np.concatenate([b.returns() for b in run_batches(spec, policy_factory, n, seed, stream, key)])
    return trial_stats(returns), returns


def alpha_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if count < 2:
        raise ConfigError("an alpha sweep needs at least two values")
    return np.linspace(lo, hi, count)


@dataclass
class SweepResult:
    alphas: np.ndarray
    stats: list
    returns: list

    @property
    def best_index(self) -> int:
        return int(np.argmax([s.mean_return for s in self.stats]))

    @property
    def best_alpha(self) -> float:
        return float(self.alphas[self.best_index])

    @property
    def best(self) -> TrialStats:
        return self.stats[self.best_index]


def sweep_alpha(spec: EnvironmentSpec, sweep: tuple[float, float, int], trials: int,
                seed: int) -> SweepResult:
    """Evaluate baseline agents on an evenly spaced, endpoint-inclusive alpha grid."""
    alphas = alpha_grid(*sweep)
    stats, returns = [], []
    for j, alpha in enumerate(alphas):
        policy = BaselinePolicy(float(alpha))
        s, r = run_trials(spec, lambda rng, p=policy: p, trials, seed, STREAM_BASELINE, (j,))
        stats.append(s)
        returns.append(r)
    return SweepResult(alphas, stats, returns)


# -- mining ----------------------------------------------------------------------

@dataclass
class MiningResult:
    profile: ComplexityProfile
    log: AbilityLog
    survivors: int

    def comparison_rows(self, spec: EnvironmentSpec):
        centers = self.profile.centers()
        return [(c, float(v[0]), float(spec.complexity(c)))
                for c, v in zip(centers.tolist(), self.profile.values)]

    def coverage_fraction(self) -> float:
        return len(self.profile.bins) / self.profile.n_bins


def mine_pipeline(config: ExperimentConfig, out_dir=None) -> MiningResult:
    """Run the probe agents, log their abilities and mine a complexity profile.

    With ``out_dir`` the profile and the mined-versus-actual comparison are
    written as ``profile.csv`` and ``comparison.csv``.
    """
    spec = config.env_spec
    log = AbilityLog(config.bin_width, spec.level_max, config.record_mode)
    survivors = 0
    for batch in run_batches(spec, config.probe_factory(), config.probes, config.seed, STREAM_PROBE):
        for traj in batch.trajectories():
            log.record(traj)
            survivors += traj.reached_goal
    if survivors == 0:
        raise EmptyCoverageError(
            f"none of {config.probes} probes reached level {spec.level_max}; nothing to mine")
    result = MiningResult(mine(log, config.rho), log, survivors)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_profile_csv(result.profile, out / "profile.csv")
        write_comparison_csv(result.comparison_rows(spec), out / "comparison.csv")
    return result


def write_comparison_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_center", "mined", "actual"])
        for c, m, a in rows:
            w.writerow([repr(c), repr(m), repr(a)])


# -- comparison --------------------------------------------------------------------

RESULTS_HEADER = ["env", "agent", "alpha", "trials", "mean_return", "std_error"]


@dataclass
class Comparison:
    env: str
    sweep: SweepResult
    flow: TrialStats
    flow_returns: np.ndarray
    profile: Optional[ComplexityProfile] = field(default=None, repr=False)

    @property
    def margin_in_se(self) -> float:
        """Flow mean minus best-baseline mean, in pooled standard errors."""
        se = pooled_se(self.flow, self.sweep.best)
        diff = self.flow.mean_return - self.sweep.best.mean_return
        return diff / se if se > 0 else math.copysign(math.inf, diff) if diff else 0.0

    def result_rows(self):
        rows = [[self.env, "baseline", repr(float(a)), s.n_trials, repr(s.mean_return), repr(s.std_error)]
                for a, s in zip(self.sweep.alphas, self.sweep.stats)]
        b = self.sweep.best
        rows.append([self.env, "best_baseline", repr(self.sweep.best_alpha), b.n_trials,
                     repr(b.mean_return), repr(b.std_error)])
        f = self.flow
        rows.append([self.env, "flow", "", f.n_trials, repr(f.mean_return), repr(f.std_error)])
        return rows

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(self.result_rows(), out / "results.csv")
        with open(out / "returns.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["agent", "alpha", "trial", "return"])
            for a, rs in zip(self.sweep.alphas, self.sweep.returns):
                for i, r in enumerate(rs.tolist()):
                    w.writerow(["baseline", repr(float(a)), i, repr(r)])
            for i, r in enumerate(self.flow_returns.tolist()):
                w.writerow(["flow", "", i, repr(r)])


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        w.writerows(rows)


def compare(spec: EnvironmentSpec, profile: ComplexityProfile, sweep: tuple[float, float, int],
            trials: int, seed: int, flow_config: FlowConfig = FlowConfig()) -> Comparison:
    """Best baseline from an alpha sweep against the flow agent on ``profile``."""
    swept = sweep_alpha(spec, sweep, trials, seed)
    policy = FlowPolicy(profile, flow_config)
    stats, returns = run_trials(spec, lambda rng: policy, trials, seed, STREAM_FLOW)
    return Comparison(spec.name, swept, stats, returns, profile)


def reproduce(config: ExperimentConfig, out_dir=None):
    """Mine a profile from probes, then compare flow and baseline agents."""
    mined = mine_pipeline(config, out_dir)
    result = compare(config.env_spec, mined.profile, config.alpha_sweep,
                     config.trials_per_setting, config.seed, config.flow_config)
    if out_dir is not None:
        result.write(out_dir)
    return mined, result


# -- traces ------------------------------------------------------------------------

def emit_trace(spec: EnvironmentSpec, policy: MetaPolicy, seed: int, out_dir=None,
               points: int = 401) -> Trajectory:
    """Run one episode; optionally write ``trace.csv`` and ``complexity.csv``."""
    traj = run_episode(spec, policy, episode_rng(seed, STREAM_TRACE, 0))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, out / "trace.csv")
        levels = np.linspace(0.0, spec.level_max, points)
        with open(out / "complexity.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "complexity"])
            for L, c in zip(levels.tolist(), spec.complexity(levels).tolist()):
                w.writerow([repr(L), repr(c)])
    return traj


__all__ = [
    "PRESETS", "ExperimentConfig", "TrialStats", "trial_stats", "pooled_se", "compute_return",
    "episode_rng", "run_batches", "replay_episode", "run_trials", "alpha_grid", "SweepResult",
    "sweep_alpha", "MiningResult", "mine_pipeline", "Comparison", "compare", "reproduce",
    "emit_trace", "write_results_csv",
]
