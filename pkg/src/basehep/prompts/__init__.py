"""Prompt template assets, loaded from packaged text files.

The whole template set is versioned by a content hash so sessions can record
exactly which prompt wording produced their outputs.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

_ASSET_NAMES = (
    "agent_task.txt",
    "agent_context.txt",
    "agent_cognitive.txt",
    "agent_time.txt",
    "attribute_instructions.txt",
    "attribute_output_contract.txt",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in _ASSET_NAMES:
        raise KeyError(f"unknown prompt asset {name!r}")
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def substitute(template: str, case_text: str) -> str:
    return template.replace("{{case_text}}", case_text)


@lru_cache(maxsize=1)
def prompt_set_version() -> str:
    digest = hashlib.sha256()
    for name in _ASSET_NAMES:
        digest.update(name.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(load_template(name).encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()[:16]
