"""Learning complexity from other agents.

Ten thousand probe agents climb with random piecewise-linear schedules.  For
every level bin we keep the abilities of the probes that went on to reach
the goal, drop the luckiest 0.1% and take the minimum.  The result is
compared with the true curve.
"""

from flowmeta import ExperimentConfig, mine_pipeline, profile_error

for env in ("sqrt", "quadratic"):
    cfg = ExperimentConfig.preset(env, seed=0)
    spec = cfg.env_spec
    mined = mine_pipeline(cfg)
    print(f"\n{env}: {mined.survivors} of {cfg.probes} probes survived, "
          f"mean abs error {profile_error(mined.profile, spec):.3g}")
    rows = mined.comparison_rows(spec)
    for center, got, true in rows[:: max(1, len(rows) // 8)]:
        print(f"  level {center:6.1f}   mined {got:8.2f}   actual {true:8.2f}")
