"""Locate and load the named benchmark graphs."""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

from .graph import Graph, load_edge_list

# where the benchmark graphs are published (konect / networkrepository)
SOURCES = {
    "kar": "konect: ucidata-zachary (bundled)",
    "words": "konect: adjnoun_adjacency (Newman's adjective-noun network, 112 nodes / 425 edges)",
    "vote": "networkrepository: soc-wiki-vote",
    "pow": "konect: opsahl-powergrid",
    "fb-75": "networkrepository: socfb-*",
}


class DatasetNotFoundError(FileNotFoundError):
    pass


def data_dirs() -> list[Path]:
    dirs = []
    env_dir = os.environ.get("HIDENET_DATA_DIR")
    if env_dir:
        dirs.append(Path(env_dir))
    dirs.append(Path(str(resources.files("hidenet") / "data")))
    return dirs


def resolve(name_or_path: str | os.PathLike) -> Path:
    p = Path(name_or_path)
    if p.suffix or p.exists() or os.sep in str(name_or_path):
        if not p.exists():
            raise DatasetNotFoundError(f"no such edge list: {p}")
        return p
    for d in data_dirs():
        for candidate in (d / f"{p}.edges", d / f"{p}.txt", d / f"out.{p}"):
            if candidate.exists():
                return candidate
    hint = SOURCES.get(str(p), "an edge list file")
    raise DatasetNotFoundError(
        f"dataset {str(p)!r} not found in {[str(d) for d in data_dirs()]}; "
        f"download {hint} and save it as <dir>/{p}.edges, with <dir> set in HIDENET_DATA_DIR")


def load(name_or_path: str | os.PathLike) -> Graph:
    with open(resolve(name_or_path), encoding="utf-8") as fh:
        return load_edge_list(fh)
