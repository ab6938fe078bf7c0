import hashlib
import io
import json
import zlib

import httpx
import pytest
from PIL import Image

from artbrain.dataset.filenames import parse_filename
from artbrain.dataset.generation import (
    GenerationJob,
    job_for,
    run_generation,
)
from artbrain.errors import ConfigurationError
from artbrain.labels import Source, Style, class_of


def _png_bytes(side: int) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (side, side), (10, 120, 200)).save(buf, format="PNG")
    return buf.getvalue()


def _client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def _run(jobs, handler, out, **kwargs):
    with _client(handler) as client:
        return run_generation(
            jobs, "http://models.test/generate", out,
            client=client, backoff_s=0.0, parallel=1, **kwargs,
        )


class TestJobConstruction:
    def test_latent_profile(self):
        job = job_for("latent", Style.BAROQUE, seed=123)
        assert job.prompt == "A painting in Baroque art style"
        assert job.negative_prompt is None
        assert job.image_side == 256
        assert job.guidance_or_diversity == 5.0
        assert job.sampler == "PLMS"
        assert job.steps == 50
        assert job.parallel_samples == 4
        assert job.source is Source.LATENT_DIFFUSION

    def test_stable_profile(self):
        job = job_for("stable", Style.UKIYO_E, seed=1)
        assert job.prompt == "A painting in Ukiyo-e art style"
        assert job.negative_prompt == "photo frame"
        assert job.image_side == 768
        assert job.guidance_or_diversity == 9.0
        assert job.sampler == "DPMS Multistep Scheduler"
        assert job.source is Source.STABLE_DIFFUSION

    def test_request_payload_shape(self):
        payload = job_for("latent", Style.REALISM, seed=42).request_payload()
        assert payload == {
            "prompt": "A painting in Realism art style",
            "negative_prompt": None,
            "steps": 50,
            "width": 256,
            "height": 256,
            "samples": 4,
            "guidance_or_diversity": 5.0,
            "sampler": "PLMS",
            "seed": 42,
        }

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            job_for("imaginary", Style.BAROQUE, seed=0)
        with pytest.raises(ConfigurationError):
            job_for("latent", Style.BAROQUE, seed=-1)
        with pytest.raises(ConfigurationError):
            job_for("latent", Style.BAROQUE, seed=10**9)
        with pytest.raises(ConfigurationError):
            GenerationJob(model="latent", style=Style.BAROQUE, prompt="x", seed=0, steps=49)
        with pytest.raises(ConfigurationError):
            GenerationJob(model="latent", style=Style.BAROQUE, prompt="x", seed=0, image_side=768)
        with pytest.raises(ConfigurationError):
            GenerationJob(
                model="stable", style=Style.BAROQUE, prompt="x", seed=0,
                image_side=768, guidance_or_diversity=9.0, sampler="PLMS",
                negative_prompt="photo frame",
            )


class TestRunGeneration:
    def test_success_writes_image_and_ledger(self, tmp_path):
        calls = []
        payload = _png_bytes(256)

        def handler(request):
            calls.append(json.loads(request.content))
            return httpx.Response(200, content=payload)

        job = job_for("latent", Style.BAROQUE, seed=7)
        report = _run([job], handler, tmp_path)
        assert (report.written, report.skipped, report.failed) == (1, 0, 0)
        assert len(calls) == 1
        assert calls[0]["seed"] == 7

        suffix = zlib.crc32(b"latent:BAROQUE:7") % 1_000_000
        expected = (
            tmp_path / "images" / "latent__baroque"
            / f"{class_of(Source.LATENT_DIFFUSION, Style.BAROQUE)}-7-{suffix}.jpg"
        )
        assert report.paths == [str(expected)]
        assert expected.is_file()
        with Image.open(expected) as stored:
            assert stored.format == "JPEG"
            assert stored.size == (256, 256)
        # the stored name still round-trips through the filename codec
        parsed = parse_filename(expected.name)
        assert parsed == (class_of(Source.LATENT_DIFFUSION, Style.BAROQUE), 7, suffix)

        lines = [json.loads(l) for l in report.ledger_path.read_text().splitlines()]
        assert len(lines) == 1
        entry = lines[0]
        assert entry["status"] == "ok"
        assert entry["model"] == "latent"
        assert entry["style"] == "BAROQUE"
        assert entry["seed"] == 7
        assert entry["attempts"] == 1
        assert entry["response_sha256"] == hashlib.sha256(payload).hexdigest()
        assert entry["request"] == job.request_payload()

    def test_server_errors_retry_then_succeed(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            if len(calls) < 3:
                return httpx.Response(500)
            return httpx.Response(200, content=_png_bytes(256))

        report = _run([job_for("latent", Style.REALISM, seed=2)], handler, tmp_path)
        assert report.written == 1 and report.failed == 0
        assert len(calls) == 3
        entry = json.loads(report.ledger_path.read_text().splitlines()[0])
        assert entry["attempts"] == 3

    def test_server_errors_exhaust_attempts(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(503)

        report = _run([job_for("latent", Style.REALISM, seed=3)], handler, tmp_path)
        assert report.failed == 1 and report.written == 0
        assert len(calls) == 3
        entry = json.loads(report.ledger_path.read_text().splitlines()[0])
        assert entry["status"] == "failed"
        assert "server error 503" in entry["error"]

    def test_transport_errors_retry(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            raise httpx.ConnectError("refused")

        report = _run([job_for("stable", Style.BAROQUE, seed=4)], handler, tmp_path)
        assert report.failed == 1
        assert len(calls) == 3
        entry = json.loads(report.ledger_path.read_text().splitlines()[0])
        assert "transport error" in entry["error"]

    def test_client_errors_fail_immediately(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(422)

        report = _run([job_for("latent", Style.BAROQUE, seed=5)], handler, tmp_path)
        assert report.failed == 1
        assert len(calls) == 1
        entry = json.loads(report.ledger_path.read_text().splitlines()[0])
        assert "rejected with 422" in entry["error"]

    def test_wrong_size_image_rejected_without_retry(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(200, content=_png_bytes(100))

        report = _run([job_for("latent", Style.BAROQUE, seed=6)], handler, tmp_path)
        assert report.failed == 1
        assert len(calls) == 1
        entry = json.loads(report.ledger_path.read_text().splitlines()[0])
        assert "expected 256x256" in entry["error"]
        assert not (tmp_path / "images").exists() or not list(
            (tmp_path / "images").rglob("*.jpg")
        )

    def test_resume_skips_completed_jobs(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(200, content=_png_bytes(256))

        jobs = [job_for("latent", Style.BAROQUE, seed=s) for s in (10, 11)]
        first = _run(jobs, handler, tmp_path)
        assert first.written == 2 and len(calls) == 2

        rerun_jobs = jobs + [job_for("latent", Style.BAROQUE, seed=12)]
        second = _run(rerun_jobs, handler, tmp_path)
        assert second.skipped == 2
        assert second.written == 1
        assert len(calls) == 3  # only the new seed hit the endpoint

    def test_failed_ledger_entries_do_not_block_rerun(self, tmp_path):
        responses = iter([httpx.Response(400), httpx.Response(200, content=_png_bytes(256))])
        calls = []

        def handler(request):
            calls.append(1)
            return next(responses)

        job = job_for("latent", Style.ART_NOUVEAU, seed=20)
        first = _run([job], handler, tmp_path)
        assert first.failed == 1
        second = _run([job], handler, tmp_path)
        assert second.written == 1 and second.skipped == 0
        assert len(calls) == 2

    def test_duplicate_jobs_in_one_batch_collapse(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(200, content=_png_bytes(256))

        job = job_for("latent", Style.BAROQUE, seed=30)
        report = _run([job, job], handler, tmp_path)
        assert report.written == 1
        assert report.skipped == 1
        assert len(calls) == 1
