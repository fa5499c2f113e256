"""Named systems shipped with the package (``data/*.json``)."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .ifs_core import Ifs, ifs_from_dict, load_ifs


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__package__).joinpath("data").iterdir() if p.name.endswith(".json"))


@lru_cache(maxsize=None)
def builtin(name: str) -> Ifs:
    path = resources.files(__package__).joinpath("data", f"{name}.json")
    if not path.is_file():
        raise KeyError(f"no builtin IFS named {name!r}; have {', '.join(builtin_names())}")
    return ifs_from_dict(json.loads(path.read_text()))


def resolve_ifs(spec: str) -> Ifs:
    """A JSON file path, or a builtin name; a missing file falls back to the builtin of the same stem."""
    p = Path(spec)
    if p.is_file():
        return load_ifs(p)
    stem = p.stem if p.suffix == ".json" else spec
    return builtin(stem)
