"""Dataset tooling: filename codec, manifest validation, synthetic toy data,
and the generation-orchestrator client."""

from .filenames import SEED_MAX, format_filename, parse_filename
from .manifest import (
    DatasetManifest,
    SampleRecord,
    ValidationIssue,
    ValidationReport,
    load_mapping,
    validate_manifest,
)
from .toy import ToySpec, generate_toy
from .generation import GenerationJob, GenerationReport, job_for, run_generation
from .loading import load_records, load_split

__all__ = [
    "SEED_MAX",
    "format_filename",
    "parse_filename",
    "DatasetManifest",
    "SampleRecord",
    "ValidationIssue",
    "ValidationReport",
    "load_mapping",
    "validate_manifest",
    "ToySpec",
    "generate_toy",
    "GenerationJob",
    "GenerationReport",
    "job_for",
    "run_generation",
    "load_records",
    "load_split",
]
