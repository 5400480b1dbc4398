"""In-repo scenario presets."""

from __future__ import annotations

import importlib.resources

import yaml

from ..config import RunConfig

PRESET_NAMES = ("steering-demo", "skewed-audience", "dynamic-trust")


def load_preset(name: str) -> RunConfig:
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    text = importlib.resources.files(__package__).joinpath(f"{name}.yaml").read_text("utf-8")
    return RunConfig.from_dict(yaml.safe_load(text))


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    return importlib.resources.files(__package__).joinpath(f"{name}.yaml").read_text("utf-8")
