#!/usr/bin/env python3
"""Run the non-learned suggestion strategies on the steering scenario.

Shows why the scenario is hard for naive strategies: with demand
concentrated on genres the creators never touch, "suggest the most clicked
genre" just echoes the dead corner of the corpus.
"""

from creatorsteer.experiment import format_comparison_table, run_experiment
from creatorsteer.config import RunConfig
from creatorsteer.presets import load_preset

preset = load_preset("steering-demo")
for tag in ("none", "most_click", "most_history_click"):
    doc = preset.to_dict()
    doc["strategy"]["tag"] = tag
    run = run_experiment(RunConfig.from_dict(doc), seed=1)
    s = run.summary
    print(f"{tag:>20}: clicks={s['final_cumulative_clicks']:>6} "
          f"diversity={s['diversity']:.3f} active={s['active_creators']:.1f}")

print("\n(the learned strategy on this same world is demo 03)")
