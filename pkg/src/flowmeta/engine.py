"""Lockstep simulation of many testbed episodes with numpy.

Episode ``i`` consumes ``uniforms[i, t]`` as its death draw at step ``t``,
which is exactly what :func:`flowmeta.agents.run_episode` does when handed a
generator whose next draws are those numbers.  Given the same generator
state, both paths produce identical trajectories.  Only the identity base
policy is supported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agents import BaselinePolicy, ProbePolicy, Trajectory
from .env import AgentState, AgentStatus, EnvironmentSpec, ability_at, death_probability
from .flow import FlowPolicy

ALIVE, DEAD, GOAL = 0, 1, 2
_STATUS = {ALIVE: AgentStatus.ALIVE, DEAD: AgentStatus.DEAD, GOAL: AgentStatus.GOAL}


@dataclass
class Batch:
    """Level paths of a batch of episodes.

    ``levels[i, t]`` is NaN once episode ``i`` has ended; ``last[i]`` is the
    time of its final recorded sample.
    """

    spec: EnvironmentSpec
    levels: np.ndarray
    last: np.ndarray
    status: np.ndarray

    def __len__(self):
        return len(self.last)

    def trajectory(self, i: int) -> Trajectory:
        n = int(self.last[i]) + 1
        times = np.arange(n)
        abilities = np.repeat(times.astype(float)[:, None], self.spec.ability_dim, axis=1)
        return Trajectory(times, self.levels[i, :n].copy(), abilities, _STATUS[int(self.status[i])])

    def trajectories(self):
        return [self.trajectory(i) for i in range(len(self))]

    def returns(self) -> np.ndarray:
        """Per-episode return: area under the level curve through the horizon
        with goal-level fill, zero unless the goal was reached."""
        lmax, horizon = self.spec.level_max, self.spec.horizon
        out = np.zeros(len(self))
        for i in np.flatnonzero(self.status == GOAL):
            n = int(self.last[i])
            out[i] = math.fsum(self.levels[i, :n + 1]) + lmax * (horizon - n)
        return out


def _target_fn(spec: EnvironmentSpec, policies):
    lmax = spec.level_max
    first = policies[0]
    if all(isinstance(p, BaselinePolicy) for p in policies):
        alphas = np.array([p.alpha for p in policies])
        return lambda t, lev, idx: np.minimum(alphas[idx] * (t + 1), lmax)
    if all(isinstance(p, ProbePolicy) for p in policies):
        slopes = np.array([p.slopes for p in policies])
        joints = np.array([p.joints for p in policies])

        def probe(t, lev, idx):
            s = np.where(lev < joints[idx, 0], slopes[idx, 0],
                         np.where(lev < joints[idx, 1], slopes[idx, 1], slopes[idx, 2]))
            return np.minimum(lev + s, lmax)
        return probe
    if isinstance(first, FlowPolicy) and all(p is first for p in policies):
        def flow(t, lev, idx):
            uniq, inv = np.unique(lev, return_inverse=True)
            ability = ability_at(spec, t)
            chosen = np.array([first.choose(ability, float(u), lmax) for u in uniq])
            return chosen[inv]
        return flow

    def generic(t, lev, idx):
        return np.array([policies[i].target(AgentState(t, float(l), ability_at(spec, t)), spec)
                         for i, l in zip(idx, lev)])
    return generic


def simulate(spec: EnvironmentSpec, policies, uniforms: np.ndarray) -> Batch:
    """Run ``len(policies)`` episodes side by side.

    ``uniforms`` must have shape ``(len(policies), spec.horizon)``.
    """
    n, horizon = len(policies), spec.horizon
    if uniforms.shape != (n, horizon):
        raise ValueError(f"uniforms must have shape {(n, horizon)}, got {uniforms.shape}")
    targets = _target_fn(spec, policies)
    levels = np.full((n, horizon + 1), np.nan)
    levels[:, 0] = 0.0
    last = np.zeros(n, dtype=np.int64)
    status = np.full(n, ALIVE, dtype=np.int8)
    active = np.arange(n)
    for t in range(horizon):
        if active.size == 0:
            break
        cur = levels[active, t]
        tgt = targets(t, cur, active)
        p = death_probability(spec, float(t), spec.complexity(cur))
        die = uniforms[active, t] < p
        status[active[die]] = DEAD
        ok = ~die
        moved, tgt = active[ok], tgt[ok]
        levels[moved, t + 1] = tgt
        last[moved] = t + 1
        done = tgt >= spec.level_max
        status[moved[done]] = GOAL
        active = moved[~done]
    return Batch(spec, levels, last, status)
