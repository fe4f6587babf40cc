"""Paths to the data files shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

_DATA = resources.files("asktable") / "data"


def default_embeddings_path() -> Path:
    return Path(str(_DATA / "embeddings.txt"))


def default_testset_path(task: str = "simple") -> Path:
    if task not in ("simple", "composite"):
        raise ValueError(f"unknown task {task!r}")
    return Path(str(_DATA / f"testset_{task}.jsonl"))


def default_sample_tables_path() -> Path:
    return Path(str(_DATA / "sample_tables.json"))
