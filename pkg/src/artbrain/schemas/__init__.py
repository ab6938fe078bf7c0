"""Shipped JSON schemas for the machine-readable CLI and service payloads."""

from __future__ import annotations

import json
from importlib import resources

SCHEMA_NAMES = (
    "predict",
    "saliency",
    "eval",
    "train",
    "dataset-validate",
    "dataset-synth",
    "generate",
    "service-predict",
    "turing-matrix",
)


def load_schema(name: str) -> dict:
    """Load a shipped schema by stem, e.g. load_schema("predict")."""
    if name not in SCHEMA_NAMES:
        raise KeyError(f"unknown schema {name!r}; shipped: {sorted(SCHEMA_NAMES)}")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)
