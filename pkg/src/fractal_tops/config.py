"""Run configuration: defaults, overridden by a JSON file, overridden by CLI flags."""
from __future__ import annotations

import json
import os
from pathlib import Path

DEFAULTS = {
    "resolution": 1024,
    "resolution_1d": 4096,
    "depth": 6,
    "exact_depth": 8,
    "reversible_depth": 12,
    "priority_order": None,
    "containment_threshold": 0.98,
    "hausdorff_cells": 2.0,
    "seed": 0,
    "workers": 1,
    "n_points": 100_000,
    "fib_radius": 100,
    "orbit_radius": 64,
}

OUT_ENV = "FRACTAL_TOPS_OUT"


def load_config(path: str | Path | None = None, **overrides) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def output_dir(explicit: str | Path | None = None) -> Path:
    out = Path(explicit or os.environ.get(OUT_ENV) or "fractal_tops_out")
    out.mkdir(parents=True, exist_ok=True)
    return out
