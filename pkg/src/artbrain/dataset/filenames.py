"""Sample filename convention: ``{class}-{seed}-{suffix}.jpg``.

All three fields are canonical decimal integers (no leading zeros, no signs),
which makes the codec a bijection on its valid domain. The middle field is
the generation seed and must fit in [0, 999999999].
"""

from __future__ import annotations

import re

from ..errors import FormatError

SEED_MAX = 999_999_999

_CANONICAL_INT = r"(?:0|[1-9][0-9]*)"
_NAME_RE = re.compile(
    rf"^(?P<class>{_CANONICAL_INT})-(?P<seed>{_CANONICAL_INT})-(?P<suffix>{_CANONICAL_INT})\.jpg$"
)
_SEGMENTS = ("class", "seed", "suffix")


def parse_filename(name: str) -> tuple[int, int, int]:
    """Extract (class_index, seed, suffix) from a sample filename."""
    match = _NAME_RE.match(name)
    if match is None:
        raise FormatError(f"malformed sample name {name!r}: {_describe_failure(name)}")
    class_index = int(match.group("class"))
    seed = int(match.group("seed"))
    suffix = int(match.group("suffix"))
    if seed > SEED_MAX:
        raise FormatError(f"seed segment {seed} of {name!r} exceeds {SEED_MAX}")
    return class_index, seed, suffix


def format_filename(class_index: int, seed: int, suffix: int) -> str:
    """Inverse of :func:`parse_filename`; validates field ranges."""
    if class_index < 0:
        raise FormatError(f"class segment must be non-negative, got {class_index}")
    if not 0 <= seed <= SEED_MAX:
        raise FormatError(f"seed segment must lie in [0, {SEED_MAX}], got {seed}")
    if suffix < 0:
        raise FormatError(f"suffix segment must be non-negative, got {suffix}")
    return f"{class_index}-{seed}-{suffix}.jpg"


def _describe_failure(name: str) -> str:
    """Name the first offending segment for the error message."""
    if not name.endswith(".jpg"):
        return "missing .jpg extension"
    parts = name[: -len(".jpg")].split("-")
    if len(parts) != 3:
        return f"expected 3 dash-separated segments, found {len(parts)}"
    pattern = re.compile(rf"^{_CANONICAL_INT}$")
    for segment_name, part in zip(_SEGMENTS, parts):
        if not pattern.match(part):
            return f"{segment_name} segment {part!r} is not a canonical integer"
    return "segments do not form a valid name"
