"""Client for an external text-to-image generation service.

The diffusion models are opaque HTTP endpoints here: the client posts one
JSON request per job (prompt, negative prompt, steps, size, sampler,
guidance/diversity, seed), stores the returned image under the dataset
filename convention, and appends every outcome to a JSON-lines ledger. Reruns
skip seeds the ledger already marks complete, so interrupted batches resume
without duplicates. The wire schema is documented in docs/generation-api.md.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx
from PIL import Image

from ..errors import ConfigurationError, DataError
from ..labels import Source, Style, class_of
from .filenames import SEED_MAX, format_filename

PROMPT_TEMPLATE = "A painting in {style} art style"
LEDGER_FILENAME = "generation-ledger.jsonl"

# Fixed per-model generation profiles.
_PROFILES = {
    "latent": {
        "source": Source.LATENT_DIFFUSION,
        "image_side": 256,
        "guidance_or_diversity": 5.0,
        "sampler": "PLMS",
        "negative_prompt": None,
    },
    "stable": {
        "source": Source.STABLE_DIFFUSION,
        "image_side": 768,
        "guidance_or_diversity": 9.0,
        "sampler": "DPMS Multistep Scheduler",
        "negative_prompt": "photo frame",
    },
}


@dataclass(frozen=True)
class GenerationJob:
    model: str
    style: Style
    prompt: str
    seed: int
    negative_prompt: str | None = None
    steps: int = 50
    image_side: int = 256
    parallel_samples: int = 4
    guidance_or_diversity: float = 5.0
    sampler: str = "PLMS"

    def __post_init__(self):
        profile = _PROFILES.get(self.model)
        if profile is None:
            raise ConfigurationError(f"unknown generation model {self.model!r}")
        if not 0 <= self.seed <= SEED_MAX:
            raise ConfigurationError(f"seed must lie in [0, {SEED_MAX}], got {self.seed}")
        if self.steps != 50:
            raise ConfigurationError(f"diffusion steps are fixed at 50, got {self.steps}")
        for field_name in ("image_side", "guidance_or_diversity", "sampler", "negative_prompt"):
            expected = profile[field_name]
            actual = getattr(self, field_name)
            if actual != expected:
                raise ConfigurationError(
                    f"{self.model} jobs require {field_name}={expected!r}, got {actual!r}"
                )

    @property
    def source(self) -> Source:
        return _PROFILES[self.model]["source"]

    def request_payload(self) -> dict:
        return {
            "prompt": self.prompt,
            "negative_prompt": self.negative_prompt,
            "steps": self.steps,
            "width": self.image_side,
            "height": self.image_side,
            "samples": self.parallel_samples,
            "guidance_or_diversity": self.guidance_or_diversity,
            "sampler": self.sampler,
            "seed": self.seed,
        }


def job_for(model: str, style: Style, seed: int) -> GenerationJob:
    """Canonical job for a model/style/seed triple, prompt from the template."""
    profile = _PROFILES.get(model)
    if profile is None:
        raise ConfigurationError(f"unknown generation model {model!r}")
    return GenerationJob(
        model=model,
        style=style,
        prompt=PROMPT_TEMPLATE.format(style=style.display_name),
        seed=seed,
        negative_prompt=profile["negative_prompt"],
        image_side=profile["image_side"],
        guidance_or_diversity=profile["guidance_or_diversity"],
        sampler=profile["sampler"],
    )


@dataclass
class GenerationReport:
    written: int = 0
    skipped: int = 0
    failed: int = 0
    ledger_path: Path | None = None
    paths: list[str] = field(default_factory=list)


def _job_key(model: str, style_name: str, seed: int) -> tuple[str, str, int]:
    return (model, style_name, seed)


def _completed_keys(ledger_path: Path) -> set[tuple[str, str, int]]:
    done: set[tuple[str, str, int]] = set()
    if not ledger_path.is_file():
        return done
    with open(ledger_path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if entry.get("status") == "ok":
                done.add(_job_key(entry["model"], entry["style"], int(entry["seed"])))
    return done


def _sample_path(out: Path, job: GenerationJob) -> Path:
    suffix = zlib.crc32(f"{job.model}:{job.style.name}:{job.seed}".encode()) % 1_000_000
    name = format_filename(class_of(job.source, job.style), job.seed, suffix)
    return out / "images" / f"{job.model}__{job.style.name.lower()}" / name


def _store_image(payload: bytes, path: Path, expected_side: int) -> str:
    """Validate dimensions, write as JPEG, return the content hash."""
    with Image.open(io.BytesIO(payload)) as image:
        if image.size != (expected_side, expected_side):
            raise DataError(
                f"response image is {image.size[0]}x{image.size[1]}, "
                f"expected {expected_side}x{expected_side}"
            )
        image = image.convert("RGB")
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="JPEG", quality=97, subsampling=0)
    return hashlib.sha256(payload).hexdigest()


def run_generation(
    jobs: list[GenerationJob],
    endpoint: str,
    out: str | Path,
    client: httpx.Client | None = None,
    max_attempts: int = 3,
    backoff_s: float = 0.5,
    parallel: int = 4,
) -> GenerationReport:
    """Execute jobs against the endpoint with bounded parallelism.

    Transport errors and 5xx responses are retried with exponential backoff
    before being ledgered as failures; undersized/oversized response images
    are rejected without retry. Jobs whose (model, style, seed) the ledger
    already marks complete are skipped.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ledger_path = out / LEDGER_FILENAME
    report = GenerationReport(ledger_path=ledger_path)
    completed = _completed_keys(ledger_path)

    pending: list[GenerationJob] = []
    claimed = set(completed)
    for job in jobs:
        key = _job_key(job.model, job.style.name, job.seed)
        if key in claimed:
            report.skipped += 1
            continue
        claimed.add(key)
        pending.append(job)

    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=60.0)
    ledger_lock = threading.Lock()
    report_lock = threading.Lock()

    def append_ledger(entry: dict):
        with ledger_lock:
            with open(ledger_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")

    def run_one(job: GenerationJob):
        payload = job.request_payload()
        base_entry = {
            "model": job.model,
            "style": job.style.name,
            "seed": job.seed,
            "request": payload,
        }
        error = None
        for attempt in range(1, max_attempts + 1):
            try:
                response = client.post(endpoint, json=payload)
            except httpx.HTTPError as exc:
                error = f"transport error: {exc}"
            else:
                if response.status_code >= 500:
                    error = f"server error {response.status_code}"
                elif response.status_code != 200:
                    error = f"request rejected with {response.status_code}"
                    break
                else:
                    try:
                        path = _sample_path(out, job)
                        digest = _store_image(response.content, path, job.image_side)
                    except (DataError, OSError) as exc:
                        error = str(exc)
                        break
                    append_ledger(
                        {
                            **base_entry,
                            "status": "ok",
                            "attempts": attempt,
                            "response_sha256": digest,
                            "path": str(path.relative_to(out)),
                        }
                    )
                    with report_lock:
                        report.written += 1
                        report.paths.append(str(path))
                    return
            if attempt < max_attempts:
                time.sleep(backoff_s * 2 ** (attempt - 1))
        append_ledger({**base_entry, "status": "failed", "error": error})
        with report_lock:
            report.failed += 1

    try:
        if pending:
            with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
                list(pool.map(run_one, pending))
    finally:
        if own_client:
            client.close()
    return report
