"""Level-structured testbed environment.

Every real level in ``[0, level_max]`` is its own level holding a single
state.  An agent's ability is its age.  At each step the agent either dies,
with a probability that grows with the shortfall of its ability against the
complexity of the level it currently occupies, or is moved to exactly the
level its meta-control asked for.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, UsageError


class ComplexityKind(str, enum.Enum):
    SQRT = "sqrt"
    QUADRATIC = "quadratic"
    POWER = "power"


class AgentStatus(str, enum.Enum):
    ALIVE = "alive"
    DEAD = "dead"
    GOAL = "goal"


@dataclass(frozen=True)
class EnvironmentSpec:
    """Immutable description of one testbed environment.

    ``exponent`` is only read for ``ComplexityKind.POWER``; the true complexity
    of level ``L`` is then ``L ** exponent``.
    """

    complexity_kind: ComplexityKind = ComplexityKind.SQRT
    level_max: float = 200.0
    ambient_death: float = 0.001
    horizon: int = 4001
    ability_dim: int = 1
    exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "complexity_kind", ComplexityKind(self.complexity_kind))
        if not self.level_max > 0:
            raise ConfigError(f"level_max must be > 0, got {self.level_max}")
        if not 0.0 <= self.ambient_death <= 1.0:
            raise ConfigError(f"ambient_death must lie in [0, 1], got {self.ambient_death}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon}")
        if int(self.ability_dim) != self.ability_dim or self.ability_dim < 1:
            raise ConfigError(f"ability_dim must be a positive integer, got {self.ability_dim}")
        if self.complexity_kind is ComplexityKind.POWER and not self.exponent > 0:
            raise ConfigError("power complexity needs a positive exponent")

    def complexity(self, level):
        """Vectorised true complexity, without domain checks."""
        level = np.asarray(level, dtype=float)
        if self.complexity_kind is ComplexityKind.SQRT:
            return np.sqrt(level)
        if self.complexity_kind is ComplexityKind.QUADRATIC:
            return np.square(level)
        return np.power(level, self.exponent)

    @property
    def name(self) -> str:
        if self.complexity_kind is ComplexityKind.POWER:
            return f"power{self.exponent:g}"
        return self.complexity_kind.value


@dataclass(frozen=True)
class AgentState:
    time: int
    level: float
    ability: np.ndarray = field(compare=False)
    status: AgentStatus = AgentStatus.ALIVE


def ability_at(spec: EnvironmentSpec, time: int) -> np.ndarray:
    """The testbed agent's ability vector at ``time``: its age in every component."""
    return np.full(spec.ability_dim, float(time))


def initial_state(spec: EnvironmentSpec) -> AgentState:
    return AgentState(0, 0.0, ability_at(spec, 0), AgentStatus.ALIVE)


def actual_complexity(spec: EnvironmentSpec, level: float) -> float:
    """Ground-truth complexity of ``level``.

    Raises DomainError outside ``[0, spec.level_max]``.
    """
    if not 0.0 <= level <= spec.level_max:
        raise DomainError(f"level {level} outside [0, {spec.level_max}]")
    return float(spec.complexity(level))


def death_probability(spec: EnvironmentSpec, ability, complexity):
    """Per-step probability of dying.

    Equal to the ambient probability when ``ability >= complexity``, otherwise
    the ambient probability plus ``tanh(complexity - ability)``, capped at 1.
    Works elementwise on arrays.
    """
    ability = np.asarray(ability, dtype=float)
    complexity = np.asarray(complexity, dtype=float)
    p0 = spec.ambient_death
    short = np.minimum(1.0, p0 + np.tanh(complexity - ability))
    p = np.where(ability >= complexity, p0, short)
    return float(p) if p.ndim == 0 else p


def effective_ability(ability) -> float:
    # the death model is scalar; a vector agent is only as able as its weakest component
    return float(np.min(ability))


def step(spec: EnvironmentSpec, state: AgentState, target_level: float,
         rng: np.random.Generator) -> AgentState:
    """Advance one time step toward ``target_level``.

    Exactly one uniform is drawn from ``rng``.  Death is judged against the
    level the agent occupies before the move.
    """
    if state.status is not AgentStatus.ALIVE:
        raise UsageError(f"cannot step an agent whose status is {state.status.value}")
    if not 0.0 <= target_level <= spec.level_max:
        raise DomainError(f"target level {target_level} outside [0, {spec.level_max}]")
    p = death_probability(spec, effective_ability(state.ability),
                          actual_complexity(spec, state.level))
    if rng.random() < p:
        return replace(state, status=AgentStatus.DEAD)
    t = state.time + 1
    status = AgentStatus.GOAL if target_level >= spec.level_max else AgentStatus.ALIVE
    return AgentState(t, float(target_level), ability_at(spec, t), status)
