"""JSON schemas of the command-line outputs."""

import json
from functools import lru_cache
from importlib import resources

NAMES = ("list", "derive", "verify", "simulate", "manifest", "render", "elresult", "report")


@lru_cache(maxsize=None)
def _document() -> dict:
    return json.loads(resources.files(__name__).joinpath("deformvar.schema.json").read_text())


def load(name: str) -> dict:
    """Self-contained schema for one output kind, e.g. ``load("verify")``."""
    if name not in NAMES:
        raise KeyError(f"no schema {name!r}; known: {', '.join(NAMES)}")
    doc = _document()
    return {"$schema": doc["$schema"], "$ref": f"#/$defs/{name}", "$defs": doc["$defs"]}
