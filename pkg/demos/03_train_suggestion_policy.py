#!/usr/bin/env python3
"""Train the suggestion policy on the steering scenario and evaluate it.

Prints the per-cycle training log (mean reward should climb as the policy
discovers the demanded genres), then compares the frozen policy's
evaluation run against revealing nothing.
"""

from creatorsteer.config import RunConfig
from creatorsteer.experiment import run_experiment
from creatorsteer.presets import load_preset

preset = load_preset("steering-demo")
run = run_experiment(preset, seed=1)

print("training cycles:")
for row in run.training_log:
    print(f"  cycle {row['cycle']:>2}: mean_reward={row['mean_reward']:7.1f} "
          f"policy_loss={row['policy_loss']:9.3f} clip_fraction={row['clip_fraction']:.2f}")

doc = preset.to_dict()
doc["strategy"]["tag"] = "none"
baseline = run_experiment(RunConfig.from_dict(doc), seed=1)

print(f"\nevaluation ({preset.horizon} fresh rounds, same world seed):")
print(f"  learned policy: {run.summary['final_cumulative_clicks']} clicks, "
      f"diversity {run.summary['diversity']:.3f}")
print(f"  no signal:      {baseline.summary['final_cumulative_clicks']} clicks, "
      f"diversity {baseline.summary['diversity']:.3f}")
