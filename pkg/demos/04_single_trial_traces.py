"""One trial of each agent, printed as level against time.

The baseline climbs a straight line; the flow agent rises steeply while low
levels are easy and slows down as complexity catches up with its age.
CSV traces are written to ``demo_out/trace_<agent>/``.
"""

from flowmeta import BaselinePolicy, ExperimentConfig, FlowPolicy, emit_trace, mine_pipeline

cfg = ExperimentConfig.preset("sqrt", seed=0)
spec = cfg.env_spec
agents = {
    "baseline": BaselinePolicy(1.0),
    "flow": FlowPolicy(mine_pipeline(cfg).profile, cfg.flow_config),
}
traces = {name: emit_trace(spec, policy, seed=3, out_dir=f"demo_out/trace_{name}")
          for name, policy in agents.items()}

print("   t  " + "".join(f"{name:>10s}" for name in traces) + "   sqrt-curve level t^2")
for t in (0, 2, 5, 8, 11, 14, 17, 20, 50, 100, 150, 200):
    row = []
    for tr in traces.values():
        row.append(f"{tr.levels[t]:10.1f}" if t < len(tr) else f"{'goal' if tr.reached_goal else 'dead':>10s}")
    print(f"{t:4d}  " + "".join(row) + f"{min(t * t, spec.level_max):12.0f}")
for name, tr in traces.items():
    print(f"{name}: {tr.terminal.value} at t = {int(tr.times[-1])}")
