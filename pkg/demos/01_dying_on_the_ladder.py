"""A single agent on the square-root ladder.

Levels run from 0 to 200 and level L needs ability sqrt(L).  The agent's
ability is its age, so climbing too fast gets it killed and climbing too
slowly wastes return.  Run with ``python3 demos/01_dying_on_the_ladder.py``.
"""

import numpy as np

from flowmeta import BaselinePolicy, EnvironmentSpec, compute_return, death_probability, run_episode

spec = EnvironmentSpec("sqrt", level_max=200.0, ambient_death=0.001, horizon=4001)

# death risk on a level as a function of how far ability falls short
for shortfall in (0.0, 0.1, 0.5, 1.0, 3.0):
    print(f"shortfall {shortfall:4.1f}: p(death) = {death_probability(spec, 10.0, 10.0 + shortfall):.4f}")

# a fixed-rate climber: alpha levels per step
for alpha in (0.5, 1.0, 3.0):
    rng = np.random.default_rng(1)
    returns = [compute_return(run_episode(spec, BaselinePolicy(alpha), rng), spec.horizon, spec.level_max)
               for _ in range(200)]
    print(f"alpha {alpha}: mean return {np.mean(returns):9.0f}, "
          f"{np.mean(np.asarray(returns) > 0):.0%} of agents reached level 200")
