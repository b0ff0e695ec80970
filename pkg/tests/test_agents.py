import numpy as np
import pytest

from flowmeta.agents import (
    BaselinePolicy, ProbePolicy, Trajectory, baseline_target, make_probe, probe_target,
    read_trajectory_csv, run_episode, write_trajectory_csv,
)
from flowmeta.env import AgentStatus, EnvironmentSpec
from flowmeta.errors import ConfigError, ContractViolation
from flowmeta.flow import FlowPolicy
from flowmeta.mining import ComplexityProfile

SAFE_SQRT = EnvironmentSpec("sqrt", 200.0, 0.0, 4001)


def test_baseline_target():
    assert baseline_target(BaselinePolicy(0.5), 10, 200) == 5
    assert baseline_target(BaselinePolicy(1.03), 0, 200) == 0
    assert baseline_target(BaselinePolicy(1.03), 300, 200) == 200


def test_baseline_rejects_nonpositive_alpha():
    with pytest.raises(ConfigError):
        BaselinePolicy(0.0)


def test_probe_target_segments():
    p = ProbePolicy((2, 1, 1), (10, 20))
    assert probe_target(p, 3, 200) == 5
    assert probe_target(p, 200, 200) == 200
    assert probe_target(ProbePolicy((1, 3, 1), (5, 9)), 6, 200) == 9
    assert probe_target(ProbePolicy((1, 3, 7), (5, 9)), 9, 200) == 16


def test_make_probe_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = make_probe(rng, 200, (0.5, 3))
        assert 0 <= p.joints[0] <= p.joints[1] <= 200
        assert all(0.5 <= s <= 3 for s in p.slopes)
    flat = make_probe(rng, 200, (1, 1))
    assert flat.slopes == (1.0, 1.0, 1.0)
    a = make_probe(np.random.default_rng(5), 40, (0.01, 1), (1, 40), log_scale=True)
    b = make_probe(np.random.default_rng(5), 40, (0.01, 1), (1, 40), log_scale=True)
    assert a == b


@pytest.mark.parametrize("slopes,joints,log", [
    ((0, 1), None, False), ((2, 1), None, False), ((1, np.inf), None, False),
    ((1, 2), (0, 300), False), ((1, 2), (0, 10), True),
])
def test_make_probe_rejects_bad_ranges(slopes, joints, log):
    with pytest.raises(ConfigError):
        make_probe(np.random.default_rng(0), 200, slopes, joints, log)


def test_baseline_episode_reaches_goal_on_schedule():
    # survives the single risky step at t=1 (death chance 1.5%) under this seed
    traj = run_episode(SAFE_SQRT, BaselinePolicy(1.03), np.random.default_rng(0))
    assert traj.terminal is AgentStatus.GOAL
    assert traj.goal_time == 195  # ceil(200 / 1.03)
    assert np.array_equal(traj.levels, np.minimum(1.03 * traj.times, 200))


def test_certain_death_at_start():
    spec = EnvironmentSpec(ambient_death=1.0)
    traj = run_episode(spec, BaselinePolicy(1.0), np.random.default_rng(0))
    assert traj.terminal is AgentStatus.DEAD and len(traj) == 1


def test_flow_agent_on_exact_profile_tracks_square():
    # the agent at age t picks the level whose complexity is t, i.e. t**2,
    # so it stands on 14**2 at t=15 and jumps to the goal at t=16
    profile = ComplexityProfile.from_function(np.sqrt, 200.0)
    traj = run_episode(SAFE_SQRT, FlowPolicy(profile), np.random.default_rng(0))
    assert traj.terminal is AgentStatus.GOAL
    assert traj.levels[1:16].tolist() == [float(t * t) for t in range(15)]
    assert traj.goal_time == 16


def test_probe_trajectory_is_piecewise_linear():
    spec = EnvironmentSpec("sqrt", 200.0, 0.0, 400)
    p = ProbePolicy((2.0, 0.5, 3.0), (20.0, 40.0))
    traj = run_episode(spec, p, np.random.default_rng(0))
    steps = np.round(np.diff(traj.levels), 12)
    assert np.all(steps >= 0)
    changes = np.flatnonzero(np.diff(steps[:-1]))  # the final step is clipped at the goal
    assert len(changes) <= 2


def test_horizon_exhaustion_leaves_agent_alive():
    spec = EnvironmentSpec("sqrt", 200.0, 0.0, 10)
    traj = run_episode(spec, BaselinePolicy(1.0), np.random.default_rng(0))
    assert traj.terminal is AgentStatus.ALIVE and traj.times[-1] == 10 and traj.goal_time is None


def test_base_policy_must_not_change_level():
    def nudge(state, spec):
        return type(state)(state.time, state.level + 0.5, state.ability, state.status)

    with pytest.raises(ContractViolation):
        run_episode(SAFE_SQRT, BaselinePolicy(1.0), np.random.default_rng(0), nudge)


def test_episode_replay_is_identical():
    spec = EnvironmentSpec("quadratic", 40.0, 0.0001, 4001)
    a = run_episode(spec, ProbePolicy((0.5, 0.1, 0.02), (2, 10)), np.random.default_rng(3))
    b = run_episode(spec, ProbePolicy((0.5, 0.1, 0.02), (2, 10)), np.random.default_rng(3))
    assert np.array_equal(a.levels, b.levels) and a.terminal is b.terminal


def test_trajectory_csv_roundtrip(tmp_path):
    traj = run_episode(SAFE_SQRT, BaselinePolicy(1.0), np.random.default_rng(0))
    write_trajectory_csv(traj, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,level,ability,status"
    assert lines[-1].endswith(",goal") and lines[1].endswith(",")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(back.levels, traj.levels) and back.terminal is traj.terminal
    assert isinstance(back, Trajectory)
