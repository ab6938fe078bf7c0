"""Dataset tree validation.

Expected layout: ``root/{train,test}/{folder}/{class}-{seed}-{suffix}.jpg``
with an external folder -> (source, style) mapping, since folder names are
site-specific configuration. Validation itemizes problems (unknown folders,
malformed names, unreadable files, duplicates) instead of aborting, and
compares the resulting counts against expected counts when available.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ConfigurationError, DataError
from ..labels import MAPPING_VERSION, Source, Style, class_of
from .filenames import parse_filename

SPLITS = ("train", "test")
MAPPING_FILENAME = "mapping.json"
COUNTS_FILENAME = "counts.json"


@dataclass(frozen=True)
class SampleRecord:
    path: str  # POSIX-style, relative to the dataset root
    split: str
    source: Source
    style: Style
    class_index_on_disk: int
    seed: int
    suffix: int


@dataclass
class ValidationIssue:
    kind: str  # unknown-folder | malformed-name | unreadable-file | duplicate-path | count-mismatch
    path: str
    detail: str


@dataclass
class DatasetManifest:
    records: list[SampleRecord]
    mapping_version: str = MAPPING_VERSION

    def counts(self) -> dict[tuple[str, Source, Style], int]:
        table: dict[tuple[str, Source, Style], int] = {}
        for record in self.records:
            key = (record.split, record.source, record.style)
            table[key] = table.get(key, 0) + 1
        return table

    def count(self, split: str, source: Source, style: Style) -> int:
        return self.counts().get((split, source, style), 0)

    def source_totals(self, split: str) -> dict[Source, int]:
        totals = {source: 0 for source in Source}
        for (record_split, source, _), n in self.counts().items():
            if record_split == split:
                totals[source] += n
        return totals

    def total(self, split: str | None = None) -> int:
        if split is None:
            return len(self.records)
        return sum(1 for record in self.records if record.split == split)

    def balanced_test(self) -> bool:
        """True when every (source, style) cell of the test split has the same count."""
        cells = [n for (split, _, _), n in self.counts().items() if split == "test"]
        return len(set(cells)) <= 1

    def to_json_dict(self, include_records: bool = False) -> dict:
        payload = {
            "mapping_version": self.mapping_version,
            "totals": {split: self.total(split) for split in SPLITS},
            "counts": counts_to_nested(self.counts()),
            "balanced_test": self.balanced_test(),
        }
        if include_records:
            payload["records"] = [
                {**asdict(record), "source": record.source.name.lower(),
                 "style": record.style.name.lower()}
                for record in self.records
            ]
        return payload


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)
    files_seen: int = 0
    records_accepted: int = 0
    counts_match: bool | None = None  # None when no expected counts were given

    @property
    def ok(self) -> bool:
        return not self.issues and self.counts_match is not False

    def to_json_dict(self) -> dict:
        return {
            "ok": self.ok,
            "files_seen": self.files_seen,
            "records_accepted": self.records_accepted,
            "counts_match": self.counts_match,
            "issues": [asdict(issue) for issue in self.issues],
        }


def counts_to_nested(counts: dict[tuple[str, Source, Style], int]) -> dict:
    nested: dict = {split: {} for split in SPLITS}
    for (split, source, style), n in sorted(
        counts.items(), key=lambda item: (item[0][0], item[0][1], item[0][2])
    ):
        nested.setdefault(split, {}).setdefault(source.name.lower(), {})[
            style.name.lower()
        ] = n
    return nested


def nested_to_counts(nested: dict) -> dict[tuple[str, Source, Style], int]:
    counts: dict[tuple[str, Source, Style], int] = {}
    for split, per_source in nested.items():
        for source_name, per_style in per_source.items():
            for style_name, n in per_style.items():
                counts[(split, Source[source_name.upper()], Style[style_name.upper()])] = int(n)
    return counts


def load_mapping(path: str | Path) -> dict[str, tuple[Source, Style]]:
    """Read a folder -> (source, style) mapping JSON file."""
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    mapping: dict[str, tuple[Source, Style]] = {}
    for folder, entry in raw.items():
        try:
            mapping[folder] = (
                Source[entry["source"].upper()],
                Style[entry["style"].upper()],
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad mapping entry for folder {folder!r}: {exc}") from exc
    return mapping


def validate_manifest(
    root: str | Path,
    mapping: dict[str, tuple[Source, Style]] | None = None,
    expected_counts: dict[tuple[str, Source, Style], int] | None = None,
) -> tuple[DatasetManifest, ValidationReport]:
    """Walk a dataset tree into a manifest plus an itemized validation report.

    ``mapping`` defaults to ``root/mapping.json``; ``expected_counts``
    defaults to ``root/counts.json`` when that sidecar exists.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    if mapping is None:
        mapping_path = root / MAPPING_FILENAME
        if not mapping_path.is_file():
            raise ConfigurationError(
                f"no folder mapping given and {mapping_path} does not exist"
            )
        mapping = load_mapping(mapping_path)
    if expected_counts is None:
        counts_path = root / COUNTS_FILENAME
        if counts_path.is_file():
            with open(counts_path, encoding="utf-8") as handle:
                expected_counts = nested_to_counts(json.load(handle)["counts"])

    report = ValidationReport()
    records: list[SampleRecord] = []
    seen_paths: set[str] = set()
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            continue
        for folder in sorted(p for p in split_dir.iterdir() if p.is_dir()):
            if folder.name not in mapping:
                report.issues.append(
                    ValidationIssue(
                        kind="unknown-folder",
                        path=str(folder.relative_to(root)),
                        detail="folder missing from the source/style mapping",
                    )
                )
                continue
            source, style = mapping[folder.name]
            for file in sorted(p for p in folder.iterdir() if p.is_file()):
                report.files_seen += 1
                relative = file.relative_to(root).as_posix()
                try:
                    class_index, seed, suffix = parse_filename(file.name)
                except Exception as exc:
                    report.issues.append(
                        ValidationIssue(kind="malformed-name", path=relative, detail=str(exc))
                    )
                    continue
                try:
                    with open(file, "rb") as handle:
                        if len(handle.read(2)) < 2:
                            raise OSError("file shorter than 2 bytes")
                except OSError as exc:
                    report.issues.append(
                        ValidationIssue(kind="unreadable-file", path=relative, detail=str(exc))
                    )
                    continue
                if relative in seen_paths:
                    report.issues.append(
                        ValidationIssue(
                            kind="duplicate-path", path=relative, detail="path already recorded"
                        )
                    )
                    continue
                seen_paths.add(relative)
                records.append(
                    SampleRecord(
                        path=relative,
                        split=split,
                        source=source,
                        style=style,
                        class_index_on_disk=class_index,
                        seed=seed,
                        suffix=suffix,
                    )
                )
                report.records_accepted += 1

    manifest = DatasetManifest(records=records)
    if expected_counts is not None:
        report.counts_match = True
        actual = manifest.counts()
        for key in sorted(set(expected_counts) | set(actual), key=lambda k: (k[0], k[1], k[2])):
            expected = expected_counts.get(key, 0)
            got = actual.get(key, 0)
            if expected != got:
                report.counts_match = False
                split, source, style = key
                report.issues.append(
                    ValidationIssue(
                        kind="count-mismatch",
                        path=f"{split}/{source.name.lower()}/{style.name.lower()}",
                        detail=f"expected {expected} samples, found {got}",
                    )
                )
    return manifest, report


def class_targets(manifest: DatasetManifest) -> list[int]:
    """Taxonomy class index per record (order matches manifest.records)."""
    return [class_of(record.source, record.style) for record in manifest.records]
