"""Weight archive file format.

Layout: 6 magic bytes ``ACNX1\\0``, a little-endian u64 header length, a UTF-8
JSON header, then a raw data region. The header lists every tensor with name,
dtype (always ``f32``), shape, byte offset relative to the data region start,
and byte count; tensors are stored row-major as little-endian 32-bit floats.
An optional ``metadata`` object carries model configuration so a predictor can
be rebuilt from the file alone.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArchiveDuplicateNameError,
    ArchiveError,
    ArchiveMagicError,
    ArchiveTruncatedError,
)

MAGIC = b"ACNX1\0"
FORMAT_VERSION = 1


@dataclass
class WeightArchive:
    """In-memory weight archive: named float32 tensors plus metadata."""

    tensors: dict[str, np.ndarray]
    variant: str = "unknown"
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        for name, tensor in self.tensors.items():
            if tensor.dtype != np.float32:
                raise ArchiveError(f"tensor {name!r} must be float32, got {tensor.dtype}")

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def save_archive(archive: WeightArchive, path: str | Path) -> Path:
    """Serialize an archive; round-trips bit-identically through load."""
    path = Path(path)
    entries = []
    blobs = []
    offset = 0
    for name, tensor in archive.tensors.items():
        blob = np.ascontiguousarray(tensor, dtype="<f4").tobytes()
        entries.append(
            {
                "name": name,
                "dtype": "f32",
                "shape": list(tensor.shape),
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": archive.format_version,
        "variant": archive.variant,
        "tensors": entries,
    }
    if archive.metadata:
        header["metadata"] = archive.metadata
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)
    return path


def load_archive(path: str | Path) -> WeightArchive:
    """Parse an archive file, validating magic, header, and tensor extents."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 8 or not raw.startswith(MAGIC):
        raise ArchiveMagicError(f"{path}: missing archive magic {MAGIC!r}")
    (header_len,) = struct.unpack_from("<Q", raw, len(MAGIC))
    header_start = len(MAGIC) + 8
    data_start = header_start + header_len
    if data_start > len(raw):
        raise ArchiveTruncatedError(f"{path}: header extends past end of file")
    try:
        header = json.loads(raw[header_start:data_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"{path}: header is not valid JSON: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ArchiveError(
            f"{path}: unsupported format_version {header.get('format_version')!r}"
        )
    data = raw[data_start:]
    tensors: dict[str, np.ndarray] = {}
    for entry in header.get("tensors", []):
        name = entry["name"]
        if name in tensors:
            raise ArchiveDuplicateNameError(f"{path}: duplicate tensor name {name!r}")
        if entry.get("dtype") != "f32":
            raise ArchiveError(f"{path}: tensor {name!r} has unsupported dtype")
        shape = tuple(int(s) for s in entry["shape"])
        nbytes = int(entry["nbytes"])
        expected = 4 * int(np.prod(shape, dtype=np.int64))
        if nbytes != expected:
            raise ArchiveError(
                f"{path}: tensor {name!r} declares {nbytes} bytes, shape needs {expected}"
            )
        offset = int(entry["offset"])
        if offset < 0 or offset + nbytes > len(data):
            raise ArchiveTruncatedError(
                f"{path}: tensor {name!r} data [{offset}, {offset + nbytes}) "
                f"exceeds data region of {len(data)} bytes"
            )
        array = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=offset)
        tensors[name] = array.reshape(shape).copy()
    return WeightArchive(
        tensors=tensors,
        variant=header.get("variant", "unknown"),
        metadata=header.get("metadata", {}),
        format_version=header["format_version"],
    )
