"""Command-line experiment harness.

Verbs:
  run      one experiment from a config file or preset
  compare  several strategies over shared seeds, with a summary table
  train    learn the suggestion policy and write a checkpoint
  eval     evaluate a saved checkpoint on a fresh environment
  presets  list or export the in-repo scenario presets
"""

from __future__ import annotations

import argparse
import copy
import os
import subprocess
import sys

from . import learner as lore
from .config import ConfigError, RunConfig, load_config, save_config
from .experiment import (Simulation, compare, derive_seed, format_comparison_table,
                         run_experiment)
from .presets import PRESET_NAMES, load_preset, preset_text
from .rngs import stream_rng


def _resolve_config(args) -> RunConfig:
    if getattr(args, "preset", None):
        config = load_preset(args.preset)
    elif getattr(args, "config", None):
        config = load_config(args.config)
    else:
        raise ConfigError("provide --config PATH or --preset NAME")
    if getattr(args, "seed", None) is not None:
        config = config.replace(seed=args.seed)
    return config


def _default_out(config: RunConfig, verb: str, seed: int) -> str:
    return os.path.join("runs", f"{config.name}-{verb}-seed{seed}")


def cmd_run(args) -> int:
    config = _resolve_config(args)
    out_dir = args.out or _default_out(config, config.strategy.tag, config.seed)
    run = run_experiment(config, out_dir=out_dir)
    s = run.summary
    div = "-" if s["diversity"] is None else f"{s['diversity']:.4f}"
    print(f"strategy={run.strategy} seed={run.seed} rounds={s['rounds']}")
    print(f"final cumulative clicks: {s['final_cumulative_clicks']}")
    print(f"content diversity:       {div}")
    print(f"active creators (mean):  {s['active_creators']:.2f}")
    if run.converged_cycle is not None:
        print(f"training converged at cycle {run.converged_cycle}")
    print(f"outputs in {out_dir}")
    return 0


def cmd_compare(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",")]
    if args.configs:
        configs = [load_config(p) for p in args.configs]
    else:
        base = load_preset(args.preset) if args.preset else None
        if base is None or not args.strategies:
            raise ConfigError("compare needs --configs, or --preset with --strategies")
        configs = []
        for tag in args.strategies.split(","):
            doc = copy.deepcopy(base.to_dict())
            doc["strategy"]["tag"] = tag.strip()
            doc["name"] = f"{base.name}-{tag.strip()}"
            configs.append(RunConfig.from_dict(doc))
    out_dir = args.out or "runs/compare"
    summaries = compare(configs, seeds, out_dir=out_dir)
    print(format_comparison_table(summaries))
    print(f"outputs in {out_dir}")
    if args.plots:
        return _shell_out_plots(out_dir, summaries, seeds, args.plots_dir)
    return 0


def _shell_out_plots(out_dir: str, summaries, seeds, plots_dir: str) -> int:
    """Invoke the plotting frontend on the comparison CSVs, if it is built."""
    welfare = os.path.join(plots_dir, "dist", "plot_welfare.js")
    spread = os.path.join(plots_dir, "dist", "plot_genre_spread.js")
    if not (os.path.exists(welfare) and os.path.exists(spread)):
        print(f"plots: frontend not built under {plots_dir} (run `npm run build` there)",
              file=sys.stderr)
        return 1
    series = []
    for s in summaries:
        paths = [os.path.join(out_dir, s.strategy, f"seed_{seed}", "metrics.csv")
                 for seed in s.seeds]
        series.append(f"{s.strategy}={','.join(paths)}")
    rc = subprocess.run(["node", welfare, "--in", *series,
                         "--out", os.path.join(out_dir, "welfare.svg")]).returncode
    if rc != 0:
        return rc
    spread_csvs = [os.path.join(out_dir, s.strategy, f"seed_{seeds[0]}", "genre_spread.csv")
                   for s in summaries]
    rc = subprocess.run(["node", spread, "--in", *spread_csvs,
                         "--out", os.path.join(out_dir, "genre_spread.svg")]).returncode
    if rc == 0:
        print(f"plots written to {out_dir}")
    return rc


def cmd_train(args) -> int:
    config = _resolve_config(args)
    if config.strategy.tag != "lore":
        raise ConfigError("train requires strategy.tag = lore")
    out_dir = args.out or _default_out(config, "train", config.seed)
    os.makedirs(out_dir, exist_ok=True)
    hyper = config.strategy.learner
    train_seed = derive_seed(config.seed, "train")
    result = lore.train(lambda: Simulation(config, train_seed), hyper, seed=train_seed)
    from .experiment import _provenance, _write_training_log
    _write_training_log(os.path.join(out_dir, "training_log.csv"), result.log,
                        _provenance(config, config.seed))
    ckpt = os.path.join(out_dir, "checkpoint.json")
    lore.save_checkpoint(ckpt, result.policy, result.critic, hyper,
                         rng_states=result.rng_state)
    if result.diverged:
        print("training diverged; partial log written", file=sys.stderr)
        return 2
    where = (f"converged at cycle {result.converged_cycle}"
             if result.converged_cycle else "hit the round cap")
    print(f"training {where}; checkpoint at {ckpt}")
    return 0


def cmd_eval(args) -> int:
    config = _resolve_config(args)
    policy, _critic, _hyper, _trust, _rng = lore.load_checkpoint(args.checkpoint)
    expected = (config.populations.creators, config.populations.genres)
    if (policy.n_creators, policy.n_genres) != expected:
        raise ConfigError(f"checkpoint shape {policy.n_creators}x{policy.n_genres} does not "
                          f"match config populations {expected}")
    rounds = args.rounds or config.horizon
    sim = Simulation(config, derive_seed(config.seed, "eval"))
    eval_rng = stream_rng(config.seed, "lore-eval")
    for _ in range(rounds):
        enc = lore.encode(sim.observation(), sim.n_genres).ravel()
        action, _, _ = lore.act(policy, enc, eval_rng)
        sim.apply(action)
    out_dir = args.out or _default_out(config, "eval", config.seed)
    os.makedirs(out_dir, exist_ok=True)
    from .experiment import _provenance, _write_event_log, _write_metrics_csv
    prov = _provenance(config, config.seed)
    _write_metrics_csv(os.path.join(out_dir, "metrics.csv"), sim.metrics_rows, prov)
    _write_event_log(os.path.join(out_dir, "events.jsonl"), sim.event_log, prov)
    s = sim.summary()
    print(f"evaluated {rounds} rounds: {s['final_cumulative_clicks']} cumulative clicks")
    print(f"outputs in {out_dir}")
    return 0


def cmd_presets(args) -> int:
    if args.export:
        os.makedirs(args.export, exist_ok=True)
        for name in PRESET_NAMES:
            path = os.path.join(args.export, f"{name}.yaml")
            with open(path, "w", encoding="utf-8") as f:
                f.write(preset_text(name))
            print(path)
    else:
        for name in PRESET_NAMES:
            print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="creatorsteer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="path to a YAML run config")
        p.add_argument("--preset", choices=PRESET_NAMES, help="in-repo scenario preset")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_run = sub.add_parser("run", help="run one experiment")
    add_config_args(p_run)
    p_run.add_argument("--out", help="output directory")
    p_run.set_defaults(fn=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare strategies over shared seeds")
    p_cmp.add_argument("--configs", nargs="*", help="config files differing only in strategy")
    p_cmp.add_argument("--preset", choices=PRESET_NAMES)
    p_cmp.add_argument("--strategies", help="comma list of strategy tags (with --preset)")
    p_cmp.add_argument("--seeds", required=True, help="comma list of seeds")
    p_cmp.add_argument("--out", help="output directory")
    p_cmp.add_argument("--plots", action="store_true", help="shell out to the plotting frontend")
    p_cmp.add_argument("--plots-dir", default="frontend", help="frontend package location")
    p_cmp.set_defaults(fn=cmd_compare)

    p_train = sub.add_parser("train", help="train the suggestion policy")
    add_config_args(p_train)
    p_train.add_argument("--out", help="output directory")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    add_config_args(p_eval)
    p_eval.add_argument("--rounds", type=int, default=None, help="evaluation rounds")
    p_eval.add_argument("--out", help="output directory")
    p_eval.set_defaults(fn=cmd_eval)

    p_presets = sub.add_parser("presets", help="list or export presets")
    p_presets.add_argument("--export", help="write preset YAMLs to this directory")
    p_presets.set_defaults(fn=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
