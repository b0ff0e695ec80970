"""Social learning of level complexity from observed (probe) agents.

Trajectories are binned by level into an :class:`AbilityLog`.  Mining keeps
only the agents that went on to reach the goal, drops the lowest ``rho``
fraction of their abilities in each bin as lucky outliers and takes the
per-component minimum of what remains.

Two recording modes exist:

``"visit"``
    every recorded time step contributes the agent's ability to the bin of
    the level it occupies.
``"clear"``
    each trajectory contributes, for every bin it got past, the ability it
    had when it first stood at or above the bin's upper edge (the goal level
    for the last bin).  One sample per agent per bin makes every mined
    profile non-decreasing in level, and a bin's value is backed by agents
    that were safe anywhere inside it.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .agents import Trajectory
from .env import EnvironmentSpec
from .errors import ConfigError, DomainError, EmptyCoverageError

MODES = ("visit", "clear")


def n_bins_for(level_max: float, bin_width: float) -> int:
    return max(1, math.ceil(level_max / bin_width - 1e-9))


def bin_index(level, bin_width: float, n_bins: Optional[int] = None):
    """Bin of ``level``; with ``n_bins`` the last bin is closed at the top."""
    b = np.floor(np.asarray(level, dtype=float) / bin_width).astype(np.int64)
    if n_bins is not None:
        b = np.minimum(b, n_bins - 1)
    return int(b) if b.ndim == 0 else b


class AbilityLog:
    """Abilities of observed agents, grouped by level bin.

    Logs filled from disjoint sets of trajectories can be combined with
    :meth:`merge`; the result does not depend on how the work was split.
    """

    def __init__(self, bin_width: float = 1.0, level_max: Optional[float] = None,
                 mode: str = "visit"):
        if not bin_width > 0:
            raise ConfigError(f"bin_width must be > 0, got {bin_width}")
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "clear" and level_max is None:
            raise ConfigError("clear mode needs level_max")
        self.bin_width = float(bin_width)
        self.level_max = level_max
        self.mode = mode
        self.n_bins = None if level_max is None else n_bins_for(level_max, bin_width)
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    def __len__(self):
        return sum(len(c[0]) for c in self._chunks)

    def bin_of(self, level):
        return bin_index(level, self.bin_width, self.n_bins)

    def record(self, trajectory: Trajectory) -> "AbilityLog":
        abilities = np.asarray(trajectory.abilities, dtype=float)
        if self.mode == "visit":
            bins = np.atleast_1d(self.bin_of(trajectory.levels))
        else:
            bins, abilities = self._cleared(trajectory.levels, abilities)
        reached = np.full(len(bins), trajectory.reached_goal)
        self._append(bins, abilities, reached)
        return self

    def _cleared(self, levels, abilities):
        levels = np.asarray(levels, dtype=float)
        past = np.floor(levels / self.bin_width).astype(np.int64)
        past = np.where(levels >= self.level_max, self.n_bins, np.minimum(past, self.n_bins - 1))
        past = np.maximum.accumulate(past)
        bins = np.arange(min(int(past[-1]), self.n_bins))
        first = np.searchsorted(past, bins, side="right")
        return bins, abilities[first]

    def _append(self, bins, abilities, reached):
        if len(bins) == 0:
            return
        abilities = abilities.reshape(len(bins), -1)
        if self._chunks and self._chunks[0][1].shape[1] != abilities.shape[1]:
            raise ConfigError("ability dimension differs from earlier records")
        self._chunks.append((np.asarray(bins, dtype=np.int64), abilities,
                             np.asarray(reached, dtype=bool)))

    def add(self, level: float, ability, reached_goal: bool) -> "AbilityLog":
        """Append a single observation directly (visit semantics)."""
        self._append(np.atleast_1d(self.bin_of(level)),
                     np.atleast_2d(np.asarray(ability, dtype=float)),
                     np.array([reached_goal]))
        return self

    def merge(self, other: "AbilityLog") -> "AbilityLog":
        if (other.bin_width, other.level_max, other.mode) != (self.bin_width, self.level_max, self.mode):
            raise ConfigError("can only merge logs with identical binning and mode")
        out = AbilityLog(self.bin_width, self.level_max, self.mode)
        out._chunks = self._chunks + other._chunks
        return out

    def arrays(self):
        """Concatenated ``(bins, abilities, reached_goal)`` arrays."""
        if not self._chunks:
            return np.zeros(0, np.int64), np.zeros((0, 1)), np.zeros(0, bool)
        bins, ab, reached = zip(*self._chunks)
        return np.concatenate(bins), np.concatenate(ab), np.concatenate(reached)

    @property
    def bins(self) -> dict:
        out: dict[int, list] = {}
        for b, a, r in zip(*self.arrays()):
            out.setdefault(int(b), []).append((a, bool(r)))
        return out

    def to_csv(self, path) -> None:
        bins, ab, reached = self.arrays()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level_bin", "ability", "reached_goal"])
            for b, a, r in zip(bins.tolist(), ab, reached.tolist()):
                w.writerow([b, ";".join(repr(float(x)) for x in a), int(r)])


@dataclass(frozen=True)
class ComplexityProfile:
    """Mined complexity per covered level bin.

    ``bins`` holds the covered bin indices in increasing order and ``values``
    the matching complexity vectors, shape ``(len(bins), k)``.
    """

    bin_width: float
    bins: np.ndarray
    values: np.ndarray
    level_max: Optional[float] = None

    @property
    def coverage(self) -> frozenset:
        return frozenset(self.bins.tolist())

    @property
    def n_bins(self) -> int:
        if self.level_max is not None:
            return n_bins_for(self.level_max, self.bin_width)
        return int(self.bins[-1]) + 1 if len(self.bins) else 0

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def as_dict(self) -> dict:
        return {int(b): v.copy() for b, v in zip(self.bins, self.values)}

    def centers(self) -> np.ndarray:
        c = (self.bins + 0.5) * self.bin_width
        return c if self.level_max is None else np.minimum(c, self.level_max)

    def table(self) -> np.ndarray:
        """Value used for every bin ``0..n_bins-1``, uncovered bins filled.

        An uncovered bin takes the value of the nearest covered bin, the
        lower one on a tie.
        """
        if len(self.bins) == 0:
            raise EmptyCoverageError("profile has no covered bins")
        idx = np.arange(self.n_bins)
        pos = np.searchsorted(self.bins, idx)
        lo = np.clip(pos - 1, 0, len(self.bins) - 1)
        hi = np.clip(pos, 0, len(self.bins) - 1)
        pick = np.where(np.abs(self.bins[hi] - idx) < np.abs(idx - self.bins[lo]), hi, lo)
        return self.values[pick]

    @classmethod
    def from_function(cls, fn, level_max: float, bin_width: float = 1.0,
                      anchor: str = "lower") -> "ComplexityProfile":
        """Profile holding ``fn`` evaluated at each bin's lower edge, center or upper edge."""
        n = n_bins_for(level_max, bin_width)
        bins = np.arange(n)
        offset = {"lower": 0.0, "center": 0.5, "upper": 1.0}[anchor]
        levels = np.minimum((bins + offset) * bin_width, level_max)
        vals = np.asarray([np.atleast_1d(fn(x)) for x in levels], dtype=float)
        return cls(float(bin_width), bins, vals, level_max)


def _trim_count(rho, m):
    # small slack so e.g. 0.29 * 100 trims 29, not 28
    return np.floor(rho * m + 1e-9).astype(np.int64)


def mine(log: AbilityLog, rho: float = 0.0) -> ComplexityProfile:
    """Mine a complexity profile from ``log``.

    In every bin the survivors' abilities are sorted per component, the
    lowest ``floor(rho * m)`` are discarded and the minimum of the rest is
    kept.  Bins without survivors are left uncovered (with a warning).
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must lie in [0, 1), got {rho}")
    bins, ab, reached = log.arrays()
    if len(bins) == 0:
        raise EmptyCoverageError("ability log is empty")
    sb, sa = bins[reached], ab[reached]
    covered, counts = np.unique(sb, return_counts=True)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)
    dead_only = np.setdiff1d(np.unique(bins), covered)
    if len(dead_only):
        warnings.warn(f"{len(dead_only)} level bin(s) have no surviving agents and stay uncovered",
                      stacklevel=2)
    k = ab.shape[1]
    values = np.empty((len(covered), k))
    pick = starts + _trim_count(rho, counts)
    for j in range(k):
        order = np.lexsort((sa[:, j], sb))
        values[:, j] = sa[order, j][pick]
    return ComplexityProfile(log.bin_width, covered, values, log.level_max)


def lookup(profile: ComplexityProfile, level: float) -> np.ndarray:
    """Mined complexity at ``level`` (nearest covered bin if its own is uncovered)."""
    if len(profile.bins) == 0:
        raise EmptyCoverageError("profile has no covered bins")
    top = profile.level_max if profile.level_max is not None else math.inf
    if not 0.0 <= level <= top:
        raise DomainError(f"level {level} outside [0, {top}]")
    b = bin_index(level, profile.bin_width, profile.n_bins if profile.level_max is not None else None)
    pos = int(np.searchsorted(profile.bins, b))
    if pos < len(profile.bins) and profile.bins[pos] == b:
        return profile.values[pos].copy()
    candidates = [i for i in (pos - 1, pos) if 0 <= i < len(profile.bins)]
    best = min(candidates, key=lambda i: (abs(int(profile.bins[i]) - b), profile.bins[i]))
    return profile.values[best].copy()


def profile_error(profile: ComplexityProfile, spec: EnvironmentSpec) -> float:
    """Mean absolute deviation from the true curve over covered-bin centers."""
    if len(profile.bins) == 0:
        raise EmptyCoverageError("profile has no covered bins")
    centers = np.minimum((profile.bins + 0.5) * profile.bin_width, spec.level_max)
    mined = np.array([lookup(profile, c) for c in centers])
    actual = spec.complexity(centers)[:, None]
    return float(np.mean(np.abs(mined - actual)))


def write_profile_csv(profile: ComplexityProfile, path) -> None:
    header = ["bin_center"] + (["complexity"] if profile.dim == 1
                               else [f"c{j + 1}" for j in range(profile.dim)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for c, v in zip(profile.centers().tolist(), profile.values):
            w.writerow([repr(c)] + [repr(float(x)) for x in v])


def read_profile_csv(path, bin_width: float = 1.0,
                     level_max: Optional[float] = None) -> ComplexityProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "bin_center":
        raise ConfigError(f"{path} is not a profile CSV")
    data = np.array([[float(x) for x in r] for r in rows[1:]]).reshape(-1, len(rows[0]))
    bins = np.floor(data[:, 0] / bin_width).astype(np.int64)
    if level_max is not None:
        bins = np.minimum(bins, n_bins_for(level_max, bin_width) - 1)
    return ComplexityProfile(float(bin_width), bins, data[:, 1:], level_max)
