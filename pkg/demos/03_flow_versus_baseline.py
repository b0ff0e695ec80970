"""Flow-maximising agents against the best fixed-rate climber.

Mines a profile from probes, sweeps the baseline rate over ten values and
runs 1000 trials of each agent.  Takes a few seconds per environment.
Results land in ``demo_out/<env>/``.
"""

from flowmeta import ExperimentConfig, reproduce

print(f"{'env':10s} {'agent':9s} {'mean return':>12s} {'std err':>9s}")
for env in ("sqrt", "quadratic"):
    _, res = reproduce(ExperimentConfig.preset(env, seed=0), f"demo_out/{env}")
    b, f = res.sweep.best, res.flow
    print(f"{env:10s} {'baseline':9s} {b.mean_return:12.0f} {b.std_error:9.0f}   (alpha = {res.sweep.best_alpha:.3g})")
    print(f"{env:10s} {'flow':9s} {f.mean_return:12.0f} {f.std_error:9.0f}   "
          f"(+{res.margin_in_se:.1f} pooled std errors)")
