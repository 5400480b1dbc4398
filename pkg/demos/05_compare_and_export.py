#!/usr/bin/env python3
"""Seed-averaged strategy comparison with all output files.

Produces the comparison table plus per-run metrics/event/genre-spread
files under runs/demo-compare/ (the same CSVs the plotting frontend
consumes).
"""

from creatorsteer.config import RunConfig
from creatorsteer.experiment import compare, format_comparison_table
from creatorsteer.presets import load_preset

preset = load_preset("steering-demo")
configs = []
for tag in ("none", "most_click", "lore"):
    doc = preset.to_dict()
    doc["strategy"]["tag"] = tag
    doc["name"] = f"steering-demo-{tag}"
    configs.append(RunConfig.from_dict(doc))

summaries = compare(configs, seeds=[1, 2, 3], out_dir="runs/demo-compare")
print(format_comparison_table(summaries))
print("\nfiles written under runs/demo-compare/")
