"""Bundled example problems, shipped as package data."""

from __future__ import annotations

import json
from importlib import resources

from ..schemas import ProblemDocument, document_to_spec

_SUFFIX = ".json"


def names() -> list[str]:
    files = resources.files(__package__)
    return sorted(
        entry.name[: -len(_SUFFIX)]
        for entry in files.iterdir()
        if entry.name.endswith(_SUFFIX)
    )


def load_raw(name: str) -> dict:
    if name.endswith(_SUFFIX):
        name = name[: -len(_SUFFIX)]
    if name not in names():
        raise KeyError(f"no bundled problem named {name!r}; have {names()}")
    text = resources.files(__package__).joinpath(name + _SUFFIX).read_text()
    return json.loads(text)


def load_document(name: str) -> ProblemDocument:
    return ProblemDocument.model_validate(load_raw(name))


def load_spec(name: str):
    return document_to_spec(load_document(name))
