"""Bundled example programs and models, addressable by name.

Set CPGCL_EXAMPLES to a directory to look there first.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import List

HERE = Path(__file__).parent
SUFFIXES = (".cpgcl", ".rmdp")
ALIASES = {
    "example1": "nondet_param",
    "example2": "branch_observe",
    "example3_pre": "fair_coin_observe",
    "example3": "fair_coin_loop",
    "fig4": "context_dependence",
}


def _dirs() -> List[Path]:
    extra = os.environ.get("CPGCL_EXAMPLES")
    return ([Path(extra)] if extra else []) + [HERE]


def names() -> List[str]:
    found = set()
    for d in _dirs():
        if d.is_dir():
            found |= {p.stem for p in d.iterdir() if p.suffix in SUFFIXES}
    return sorted(found)


def path(name: str) -> Path:
    """Resolve a file path or a bundled example name."""
    p = Path(name)
    if p.is_file():
        return p
    # a missing path such as examples/p_obs1.cpgcl falls back to its bundled stem
    stem = p.stem if p.suffix in SUFFIXES else p.name
    for key in dict.fromkeys([name, stem, ALIASES.get(stem, stem)]):
        for d in _dirs():
            for suffix in ("",) + SUFFIXES:
                cand = d / f"{key}{suffix}"
                if cand.is_file():
                    return cand
    raise FileNotFoundError(f"no program file or bundled example named {name!r}")


def text(name: str) -> str:
    return path(name).read_text()


def program(name: str):
    from ..parser import parse

    return parse(text(name))


def model(name: str):
    from ..operational import load_explicit

    return load_explicit(text(name))
