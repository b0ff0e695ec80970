"""Degree of flow and the flow-maximising meta-policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UsageError
from .mining import ComplexityProfile


@dataclass(frozen=True)
class FlowConfig:
    xi: float = 0.001
    search_step: float = 0.001
    neighborhood_radius: float = math.inf

    def __post_init__(self):
        if not self.xi > 0:
            raise ConfigError(f"xi must be > 0, got {self.xi}")
        if not self.search_step > 0:
            raise ConfigError(f"search_step must be > 0, got {self.search_step}")
        if not self.neighborhood_radius > 0:
            raise ConfigError(f"neighborhood_radius must be > 0, got {self.neighborhood_radius}")


def flow_degree(ability, complexity, xi: float) -> float:
    """``1 / (||ability - complexity|| + xi)``; peaks at ``1/xi`` on a perfect match."""
    a = np.atleast_1d(np.asarray(ability, dtype=float))
    c = np.atleast_1d(np.asarray(complexity, dtype=float))
    if a.shape != c.shape:
        raise UsageError(f"ability has shape {a.shape} but complexity has {c.shape}")
    if not xi > 0:
        raise ConfigError(f"xi must be > 0, got {xi}")
    return 1.0 / (float(np.linalg.norm(a - c)) + xi)


def search_grid(current_level: float, level_max: float, config: FlowConfig) -> np.ndarray:
    """Candidate levels: ``current_level + j * search_step`` inside the
    neighbourhood window, plus the window's end points."""
    step = config.search_step
    lo = max(0.0, current_level - config.neighborhood_radius)
    hi = min(level_max, current_level + config.neighborhood_radius)
    j = np.arange(math.ceil((lo - current_level) / step - 1e-9),
                  math.floor((hi - current_level) / step + 1e-9) + 1)
    grid = np.clip(current_level + j * step, lo, hi)
    if len(grid) == 0 or grid[0] > lo:
        grid = np.concatenate(([lo], grid))
    if grid[-1] < hi:
        grid = np.concatenate((grid, [hi]))
    return grid


def select_target_level(profile: ComplexityProfile, ability, current_level: float,
                        config: FlowConfig, level_max: float) -> float:
    """Grid argmax of the flow degree over the neighbourhood of ``current_level``.

    Ties go to the goal level if it is among the maximisers, otherwise to
    the candidate nearest ``current_level`` and then to the higher one.
    """
    table = profile.table()
    ability = np.atleast_1d(np.asarray(ability, dtype=float))
    if table.shape[1] != ability.shape[0]:
        raise UsageError(f"ability has {ability.shape[0]} components, profile has {table.shape[1]}")
    if not 0.0 <= current_level <= level_max:
        raise UsageError(f"current level {current_level} outside [0, {level_max}]")
    per_bin = 1.0 / (np.linalg.norm(table - ability, axis=1) + config.xi)
    grid = search_grid(current_level, level_max, config)
    bins = np.minimum(np.floor(grid / profile.bin_width).astype(np.int64), len(table) - 1)
    f = per_bin[bins]
    best = f == f.max()
    if best[-1] and grid[-1] >= level_max:
        return float(level_max)
    cand = grid[best]
    dist = np.abs(cand - current_level)
    return float(cand[dist == dist.min()].max())


@dataclass
class FlowPolicy:
    """Meta-policy moving the agent to the level whose mined complexity best
    matches its current ability.  Choices are memoised per (ability, level)."""

    profile: ComplexityProfile
    config: FlowConfig = field(default_factory=FlowConfig)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def choose(self, ability, level: float, level_max: float) -> float:
        key = (tuple(np.atleast_1d(ability).tolist()), float(level), float(level_max))
        if key not in self._memo:
            self._memo[key] = select_target_level(self.profile, ability, level,
                                                  self.config, level_max)
        return self._memo[key]

    def target(self, state, spec):
        return self.choose(state.ability, state.level, spec.level_max)
