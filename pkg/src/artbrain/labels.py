"""Class taxonomy: 3 sources x 10 art styles = 30 classes.

The canonical class index is ``10 * source + style`` with sources ordered
Human, LatentDiffusion, StableDiffusion and styles in the fixed order below.
Dataset manifests carry a ``mapping_version`` so on-disk folder names bind to
these indices explicitly rather than by convention.
"""

from __future__ import annotations

import enum

import numpy as np

MAPPING_VERSION = "v1"

NUM_SOURCES = 3
NUM_STYLES = 10
NUM_CLASSES = NUM_SOURCES * NUM_STYLES


class Source(enum.IntEnum):
    """Origin of an artwork."""

    HUMAN = 0
    LATENT_DIFFUSION = 1
    STABLE_DIFFUSION = 2

    @property
    def display_name(self) -> str:
        return _SOURCE_NAMES[self]


class Style(enum.IntEnum):
    """Art style, ordered alphabetically; the ordering is frozen."""

    ART_NOUVEAU = 0
    BAROQUE = 1
    EXPRESSIONISM = 2
    IMPRESSIONISM = 3
    POST_IMPRESSIONISM = 4
    REALISM = 5
    RENAISSANCE = 6
    ROMANTICISM = 7
    SURREALISM = 8
    UKIYO_E = 9

    @property
    def display_name(self) -> str:
        return _STYLE_NAMES[self]


_SOURCE_NAMES = {
    Source.HUMAN: "Human",
    Source.LATENT_DIFFUSION: "Latent Diffusion",
    Source.STABLE_DIFFUSION: "Stable Diffusion",
}

_STYLE_NAMES = {
    Style.ART_NOUVEAU: "Art Nouveau",
    Style.BAROQUE: "Baroque",
    Style.EXPRESSIONISM: "Expressionism",
    Style.IMPRESSIONISM: "Impressionism",
    Style.POST_IMPRESSIONISM: "Post Impressionism",
    Style.REALISM: "Realism",
    Style.RENAISSANCE: "Renaissance",
    Style.ROMANTICISM: "Romanticism",
    Style.SURREALISM: "Surrealism",
    Style.UKIYO_E: "Ukiyo-e",
}


def class_of(source: Source, style: Style) -> int:
    """Return the canonical class index for a (source, style) pair."""
    return NUM_STYLES * int(source) + int(style)


def parts_of(class_index: int) -> tuple[Source, Style]:
    """Inverse of :func:`class_of`."""
    if not 0 <= class_index < NUM_CLASSES:
        raise ValueError(f"class index {class_index} outside [0, {NUM_CLASSES - 1}]")
    return Source(class_index // NUM_STYLES), Style(class_index % NUM_STYLES)


def source_of(class_index: int) -> Source:
    return parts_of(class_index)[0]


def style_of(class_index: int) -> Style:
    return parts_of(class_index)[1]


def _check_probs(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (NUM_CLASSES,):
        raise ValueError(f"expected a length-{NUM_CLASSES} vector, got shape {probs.shape}")
    return probs


def source_marginals(probs: np.ndarray) -> np.ndarray:
    """Sum the 10 style subclass probabilities of each source.

    Summing and averaging differ only by the constant factor 10 (every source
    owns exactly 10 subclasses), so the argmax source is identical under
    either reading; sums keep the result a probability vector.
    """
    probs = _check_probs(probs)
    return probs.reshape(NUM_SOURCES, NUM_STYLES).sum(axis=1)


def style_marginals(probs: np.ndarray) -> np.ndarray:
    """Sum the 3 source subclass probabilities of each style."""
    probs = _check_probs(probs)
    return probs.reshape(NUM_SOURCES, NUM_STYLES).sum(axis=0)


def class_mapping() -> list[dict]:
    """Full index mapping, exported as JSON for the UI and reports."""
    return [
        {
            "class_index": idx,
            "source": source_of(idx).display_name,
            "style": style_of(idx).display_name,
        }
        for idx in range(NUM_CLASSES)
    ]
