"""Agent operation loop and the fixed-schedule meta-policies.

A meta-policy is any object with ``target(state, spec) -> float`` returning
the level the agent should move to next.  A base policy acts within a level
and is called as ``base_policy(state, spec) -> AgentState``; it must never
change the level.  The testbed uses the identity base policy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from .env import AgentState, AgentStatus, EnvironmentSpec, initial_state, step
from .errors import ConfigError, ContractViolation


class MetaPolicy(Protocol):
    def target(self, state: AgentState, spec: EnvironmentSpec) -> float: ...


BasePolicy = Callable[[AgentState, EnvironmentSpec], AgentState]


def identity_policy(state: AgentState, spec: EnvironmentSpec) -> AgentState:
    return state


@dataclass(frozen=True)
class BaselinePolicy:
    """Climb at a fixed rate of ``alpha`` levels per time step."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")

    def target(self, state, spec):
        return baseline_target(self, state.time + 1, spec.level_max)


def baseline_target(policy: BaselinePolicy, time: int, level_max: float) -> float:
    return min(policy.alpha * time, level_max)


@dataclass(frozen=True)
class ProbePolicy:
    """Piecewise-linear climber.

    Uses ``slopes[0]`` below level ``joints[0]``, ``slopes[1]`` up to
    ``joints[1]`` and ``slopes[2]`` above it.
    """

    slopes: tuple[float, float, float]
    joints: tuple[float, float]

    def __post_init__(self):
        if len(self.slopes) != 3 or min(self.slopes) <= 0:
            raise ConfigError(f"need three positive slopes, got {self.slopes}")
        if len(self.joints) != 2 or not 0 <= self.joints[0] <= self.joints[1]:
            raise ConfigError(f"joints must satisfy 0 <= l1 <= l2, got {self.joints}")

    def slope_at(self, level: float) -> float:
        if level < self.joints[0]:
            return self.slopes[0]
        if level < self.joints[1]:
            return self.slopes[1]
        return self.slopes[2]

    def target(self, state, spec):
        return probe_target(self, state.level, spec.level_max)


def probe_target(policy: ProbePolicy, current_level: float, level_max: float) -> float:
    return min(current_level + policy.slope_at(current_level), level_max)


def _check_range(name, lo, hi, positive):
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigError(f"{name} must be a finite interval with lo <= hi, got ({lo}, {hi})")
    if positive and lo <= 0:
        raise ConfigError(f"{name} must lie in (0, inf), got ({lo}, {hi})")
    if not positive and lo < 0:
        raise ConfigError(f"{name} must be non-negative, got ({lo}, {hi})")


def _draw(rng, lo, hi, log_scale, size=None):
    if log_scale:
        return np.exp(rng.uniform(math.log(lo), math.log(hi), size))
    return rng.uniform(lo, hi, size)


def make_probe(rng: np.random.Generator, level_max: float,
               slope_range: tuple[float, float],
               joint_range: Optional[tuple[float, float]] = None,
               log_scale: bool = False) -> ProbePolicy:
    """Draw a random probe policy.

    The draw order is fixed (first slope, both joints, remaining two slopes)
    so a seeded generator always yields the same probe.  With ``log_scale``
    slopes and joints are drawn log-uniformly instead of uniformly; the joint
    range then has to be strictly positive.
    """
    lo, hi = slope_range
    _check_range("slope_range", lo, hi, positive=True)
    jlo, jhi = joint_range if joint_range is not None else (0.0, level_max)
    _check_range("joint_range", jlo, jhi, positive=log_scale)
    if jhi > level_max:
        raise ConfigError(f"joint_range upper end {jhi} exceeds level_max {level_max}")
    first = float(_draw(rng, lo, hi, log_scale))
    joints = np.sort(_draw(rng, jlo, jhi, log_scale, 2))
    rest = _draw(rng, lo, hi, log_scale, 2)
    return ProbePolicy((first, float(rest[0]), float(rest[1])),
                       (float(joints[0]), float(joints[1])))


@dataclass(frozen=True)
class Trajectory:
    """Visited states of one episode.

    ``abilities`` has shape ``(len(times), k)``.  ``terminal`` is ``ALIVE``
    when the horizon ran out before death or goal.
    """

    times: np.ndarray
    levels: np.ndarray
    abilities: np.ndarray
    terminal: AgentStatus

    def __len__(self):
        return len(self.times)

    @property
    def goal_time(self) -> Optional[int]:
        return int(self.times[-1]) if self.terminal is AgentStatus.GOAL else None

    @property
    def reached_goal(self) -> bool:
        return self.terminal is AgentStatus.GOAL

    def samples(self):
        return list(zip(self.times.tolist(), self.levels.tolist(), self.abilities))


def run_episode(spec: EnvironmentSpec, meta_policy: MetaPolicy, rng: np.random.Generator,
                base_policy: Optional[BasePolicy] = None) -> Trajectory:
    """Run one agent from level 0 until death, goal or the horizon.

    Each iteration asks the meta-policy for a target level, lets the
    environment move (or kill) the agent, then applies the base policy,
    which may not change the level.
    """
    base_policy = base_policy or identity_policy
    state = initial_state(spec)
    times, levels, abilities = [0], [0.0], [state.ability]
    while state.status is AgentStatus.ALIVE and state.time < spec.horizon:
        nxt = step(spec, state, meta_policy.target(state, spec), rng)
        if nxt.status is AgentStatus.DEAD:
            state = nxt
            break
        moved = base_policy(nxt, spec)
        if moved.level != nxt.level:
            raise ContractViolation(
                f"base policy moved the agent from level {nxt.level} to {moved.level}")
        state = moved
        times.append(state.time)
        levels.append(state.level)
        abilities.append(state.ability)
    return Trajectory(np.asarray(times), np.asarray(levels, dtype=float),
                      np.vstack(abilities), state.status)


def _fmt_ability(a):
    return ";".join(repr(float(x)) for x in a)


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write ``t,level,ability,status``; status only on the last row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "level", "ability", "status"])
        last = len(trajectory) - 1
        for i, (t, level, ability) in enumerate(trajectory.samples()):
            w.writerow([t, repr(level), _fmt_ability(ability),
                        trajectory.terminal.value if i == last else ""])


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Trajectory(
        np.array([int(r["t"]) for r in rows]),
        np.array([float(r["level"]) for r in rows]),
        np.array([[float(x) for x in r["ability"].split(";")] for r in rows]),
        AgentStatus(rows[-1]["status"]),
    )
