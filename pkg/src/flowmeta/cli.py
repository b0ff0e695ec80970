"""Command-line entry point: ``flowmeta {mine,sweep,run,compare,trace}``.

Settings come from the environment preset (``--env``), then an optional YAML
file (``--config``), then individual flags.  Exit status is 0 on success,
1 for configuration errors and 2 for other runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .agents import BaselinePolicy
from .errors import ConfigError, FlowMetaError
from .flow import FlowPolicy
from .harness import (
    STREAM_RUN, ExperimentConfig, compare, emit_trace, mine_pipeline, run_trials,
    sweep_alpha, write_results_csv,
)
from .mining import ComplexityProfile, profile_error, read_profile_csv

FLAG_KEYS = {
    "seed": "seed", "probes": "probes", "rho": "rho", "trials": "trials_per_setting",
    "alpha_min": "alpha_min", "alpha_max": "alpha_max", "alpha_count": "alpha_count",
    "tmax": "horizon", "pdagger": "ambient_death",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of ExperimentConfig keys")
    common.add_argument("--env", choices=["sqrt", "quadratic"], help="environment preset")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--probes", type=int)
    common.add_argument("--rho", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--alpha-min", type=float)
    common.add_argument("--alpha-max", type=float)
    common.add_argument("--alpha-count", type=int)
    common.add_argument("--tmax", type=int, help="episode horizon")
    common.add_argument("--pdagger", type=float, help="ambient death probability")

    parser = argparse.ArgumentParser(prog="flowmeta", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mine", parents=[common], help="run probes and mine a complexity profile")
    sub.add_parser("sweep", parents=[common], help="baseline alpha sweep")
    for name, help_ in (("run", "n trials of one agent"), ("trace", "one episode as CSV")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--agent", choices=["baseline", "flow"], default="baseline")
        p.add_argument("--alpha", type=float, help="baseline climb rate (default: best of a sweep)")
        p.add_argument("--profile", help="profile CSV for the flow agent, or 'exact' "
                                         "for the true curve (default: mine one)")
    sub.add_parser("compare", parents=[common], help="best baseline versus flow agent")
    return parser


def _config(args) -> ExperimentConfig:
    overrides = {key: getattr(args, flag) for flag, key in FLAG_KEYS.items()
                 if getattr(args, flag) is not None}
    return ExperimentConfig.load(args.config, args.env, **overrides)


def _profile(args, cfg, out):
    if args.profile == "exact":
        return ComplexityProfile.from_function(cfg.env_spec.complexity, cfg.level_max, cfg.bin_width)
    if args.profile:
        return read_profile_csv(args.profile, cfg.bin_width, cfg.level_max)
    return mine_pipeline(cfg, out).profile


def _policy(args, cfg, out):
    if args.agent == "flow":
        return FlowPolicy(_profile(args, cfg, out), cfg.flow_config)
    alpha = args.alpha
    if alpha is None:
        alpha = sweep_alpha(cfg.env_spec, cfg.alpha_sweep, cfg.trials_per_setting, cfg.seed).best_alpha
    return BaselinePolicy(alpha)


def _print_row(env, agent, alpha, stats):
    print(f"{env:10s} {agent:14s} {alpha:>8s} {stats.n_trials:6d} "
          f"{stats.mean_return:14.1f} +- {stats.std_error:.1f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        spec = cfg.env_spec
        if args.command == "mine":
            mined = mine_pipeline(cfg, out)
            print(f"{mined.survivors}/{cfg.probes} probes reached the goal; "
                  f"coverage {mined.coverage_fraction():.1%}; "
                  f"mean abs error {profile_error(mined.profile, spec):.4g}")
        elif args.command == "sweep":
            res = sweep_alpha(spec, cfg.alpha_sweep, cfg.trials_per_setting, cfg.seed)
            rows = [[spec.name, "baseline", repr(float(a)), s.n_trials, repr(s.mean_return), repr(s.std_error)]
                    for a, s in zip(res.alphas, res.stats)]
            write_results_csv(rows, out / "results.csv")
            for a, s in zip(res.alphas, res.stats):
                _print_row(spec.name, "baseline", f"{a:.4g}", s)
            print(f"best alpha {res.best_alpha:.4g}")
        elif args.command == "run":
            policy = _policy(args, cfg, out)
            stats, returns = run_trials(spec, lambda rng: policy, cfg.trials_per_setting,
                                        cfg.seed, STREAM_RUN)
            alpha = repr(policy.alpha) if args.agent == "baseline" else ""
            write_results_csv([[spec.name, args.agent, alpha, stats.n_trials,
                                repr(stats.mean_return), repr(stats.std_error)]], out / "results.csv")
            with open(out / "returns.csv", "w") as fh:
                fh.write("trial,return\n")
                fh.writelines(f"{i},{r!r}\n" for i, r in enumerate(returns.tolist()))
            _print_row(spec.name, args.agent, alpha[:8], stats)
        elif args.command == "compare":
            mined = mine_pipeline(cfg, out)
            res = compare(spec, mined.profile, cfg.alpha_sweep, cfg.trials_per_setting,
                          cfg.seed, cfg.flow_config)
            res.write(out)
            _print_row(spec.name, "best_baseline", f"{res.sweep.best_alpha:.4g}", res.sweep.best)
            _print_row(spec.name, "flow", "", res.flow)
            print(f"flow - baseline = {res.margin_in_se:.2f} pooled standard errors")
        elif args.command == "trace":
            traj = emit_trace(spec, _policy(args, cfg, out), cfg.seed, out)
            print(f"{len(traj)} rows, terminal {traj.terminal.value}, written to {out / 'trace.csv'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FlowMetaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
