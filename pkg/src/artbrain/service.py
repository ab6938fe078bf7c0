"""HTTP inference and study service.

Endpoints: image prediction with a contrast what-if knob, fused saliency
overlays, and the timed human-vs-machine study (session, answers, submit,
aggregate matrix), plus health. Sessions persist in a SQLite file so a
service restart does not void live quizzes; responses are stored anonymously
(no identity or network fields).

The wall clock is injectable so deadline behavior is testable, and the study
image pool is a fixed 25 human / 25 machine selection from a dataset test
split; only the presentation order is shuffled, seeded per session id.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import sqlite3
import threading
import time
import uuid
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from . import labels
from .errors import ArtbrainError, ConfigurationError, DataError, FormatError
from .evaluation import (
    HUMAN_ANSWER,
    MACHINE_ANSWER,
    QUESTION_COUNT,
    SESSION_TIME_LIMIT_S,
    SKIP_ANSWER,
    KnowledgeLevel,
    TuringResponse,
    format_percent,
    score_answers,
    turing_matrix,
)
from .model import Prediction, Predictor
from .preprocess import adjust_contrast, decode_image, preprocess, resize_and_crop
from .saliency import fm_g_cam, overlay
from .dataset.manifest import validate_manifest

POOL_HUMAN_COUNT = QUESTION_COUNT // 2
POOL_MACHINE_COUNT = QUESTION_COUNT - POOL_HUMAN_COUNT
DEFAULT_OVERLAY_ALPHA = 0.45


@dataclass
class ServiceConfig:
    weights_path: str | Path | None = None
    pool_dir: str | Path | None = None
    session_db_path: str | Path = "turing-sessions.sqlite3"
    max_upload_bytes: int = 8 * 1024 * 1024
    rate_limit_per_minute: int = 30
    pool_seed: int = 2024
    static_dir: str | Path | None = None


class IntakeBody(BaseModel):
    ai_knowledge: str
    human_knowledge: str


class AnswerBody(BaseModel):
    question_id: str
    answer: str


def session_order(session_id: str, n: int) -> list[int]:
    """Deterministic per-session question order."""
    digest = hashlib.sha256(session_id.encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    return rng.permutation(n).tolist()


def _parse_level(value: str) -> KnowledgeLevel:
    try:
        return KnowledgeLevel[value.upper()]
    except KeyError:
        raise HTTPException(
            status_code=400,
            detail=f"knowledge level must be one of "
            f"{[level.name.lower() for level in KnowledgeLevel]}, got {value!r}",
        )


class SessionStore:
    """SQLite-backed store for quiz sessions and anonymized responses."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._lock = threading.Lock()
        with self._connect() as db:
            db.executescript(
                """
                CREATE TABLE IF NOT EXISTS sessions (
                    id TEXT PRIMARY KEY,
                    created_at REAL NOT NULL,
                    ai_knowledge TEXT NOT NULL,
                    human_knowledge TEXT NOT NULL,
                    questions TEXT NOT NULL,
                    submitted INTEGER NOT NULL DEFAULT 0
                );
                CREATE TABLE IF NOT EXISTS answers (
                    session_id TEXT NOT NULL,
                    question_id TEXT NOT NULL,
                    answer TEXT NOT NULL,
                    PRIMARY KEY (session_id, question_id)
                );
                CREATE TABLE IF NOT EXISTS responses (
                    session_id TEXT PRIMARY KEY,
                    ai_knowledge TEXT NOT NULL,
                    human_knowledge TEXT NOT NULL,
                    answers TEXT NOT NULL,
                    truth TEXT NOT NULL,
                    elapsed_s REAL NOT NULL
                );
                """
            )

    def _connect(self) -> sqlite3.Connection:
        return sqlite3.connect(self.path)

    def create_session(self, session_id: str, ai: KnowledgeLevel, human: KnowledgeLevel,
                       questions: list[dict], created_at: float):
        with self._lock, self._connect() as db:
            db.execute(
                "INSERT INTO sessions (id, created_at, ai_knowledge, human_knowledge, questions)"
                " VALUES (?, ?, ?, ?, ?)",
                (session_id, created_at, ai.name, human.name, json.dumps(questions)),
            )

    def get_session(self, session_id: str) -> dict | None:
        with self._connect() as db:
            row = db.execute(
                "SELECT id, created_at, ai_knowledge, human_knowledge, questions, submitted"
                " FROM sessions WHERE id = ?",
                (session_id,),
            ).fetchone()
        if row is None:
            return None
        return {
            "id": row[0],
            "created_at": row[1],
            "ai_knowledge": KnowledgeLevel[row[2]],
            "human_knowledge": KnowledgeLevel[row[3]],
            "questions": json.loads(row[4]),
            "submitted": bool(row[5]),
        }

    def record_answer(self, session_id: str, question_id: str, answer: str) -> bool:
        """False when this question already has an answer."""
        with self._lock, self._connect() as db:
            try:
                db.execute(
                    "INSERT INTO answers (session_id, question_id, answer) VALUES (?, ?, ?)",
                    (session_id, question_id, answer),
                )
            except sqlite3.IntegrityError:
                return False
        return True

    def answers_for(self, session_id: str) -> dict[str, str]:
        with self._connect() as db:
            rows = db.execute(
                "SELECT question_id, answer FROM answers WHERE session_id = ?",
                (session_id,),
            ).fetchall()
        return dict(rows)

    def mark_submitted(self, session: dict, answers: list[str], truth: list[str],
                       elapsed_s: float):
        with self._lock, self._connect() as db:
            db.execute("UPDATE sessions SET submitted = 1 WHERE id = ?", (session["id"],))
            db.execute(
                "INSERT INTO responses (session_id, ai_knowledge, human_knowledge,"
                " answers, truth, elapsed_s) VALUES (?, ?, ?, ?, ?, ?)",
                (
                    session["id"],
                    session["ai_knowledge"].name,
                    session["human_knowledge"].name,
                    json.dumps(answers),
                    json.dumps(truth),
                    elapsed_s,
                ),
            )

    def all_responses(self) -> list[TuringResponse]:
        with self._connect() as db:
            rows = db.execute(
                "SELECT session_id, ai_knowledge, human_knowledge, answers, truth, elapsed_s"
                " FROM responses ORDER BY session_id"
            ).fetchall()
        return [
            TuringResponse(
                respondent_id=row[0],
                ai_knowledge=KnowledgeLevel[row[1]],
                human_knowledge=KnowledgeLevel[row[2]],
                answers=tuple(json.loads(row[3])),
                truth=tuple(json.loads(row[4])),
                elapsed_s=row[5],
            )
            for row in rows
        ]


class RateLimiter:
    """Sliding one-minute window per client key."""

    def __init__(self, per_minute: int, clock):
        self.per_minute = per_minute
        self.clock = clock
        self._hits: dict[str, deque] = defaultdict(deque)
        self._lock = threading.Lock()

    def allow(self, key: str) -> bool:
        if self.per_minute <= 0:
            return True
        now = self.clock()
        with self._lock:
            hits = self._hits[key]
            while hits and hits[0] <= now - 60.0:
                hits.popleft()
            if len(hits) >= self.per_minute:
                return False
            hits.append(now)
            return True


def build_question_pool(pool_dir: str | Path, pool_seed: int) -> list[dict]:
    """Fixed 25 human + 25 machine image selection from a dataset test split.

    Machine questions prefer the stable-diffusion source when it has enough
    test images, since that is the generator the study showed respondents.
    """
    manifest, _ = validate_manifest(pool_dir)
    test_records = [record for record in manifest.records if record.split == "test"]
    humans = [r for r in test_records if r.source is labels.Source.HUMAN]
    stable = [r for r in test_records if r.source is labels.Source.STABLE_DIFFUSION]
    other_machine = [
        r for r in test_records
        if r.source not in (labels.Source.HUMAN, labels.Source.STABLE_DIFFUSION)
    ]
    machines = stable if len(stable) >= POOL_MACHINE_COUNT else stable + other_machine
    if len(humans) < POOL_HUMAN_COUNT or len(machines) < POOL_MACHINE_COUNT:
        raise ConfigurationError(
            f"study pool needs {POOL_HUMAN_COUNT} human and {POOL_MACHINE_COUNT} machine "
            f"test images; found {len(humans)} and {len(machines)} under {pool_dir}"
        )
    rng = np.random.default_rng(pool_seed)
    picked_humans = [humans[i] for i in rng.choice(len(humans), POOL_HUMAN_COUNT, replace=False)]
    picked_machines = [
        machines[i] for i in rng.choice(len(machines), POOL_MACHINE_COUNT, replace=False)
    ]
    pool = [
        {"path": record.path, "truth": HUMAN_ANSWER} for record in picked_humans
    ] + [
        {"path": record.path, "truth": MACHINE_ANSWER} for record in picked_machines
    ]
    return pool


def _prediction_payload(prediction: Prediction, predictor: Predictor,
                        contrast_percent: float) -> dict:
    entries = []
    for class_index, prob in prediction.top_k:
        source, style = labels.parts_of(class_index)
        entries.append(
            {
                "class_index": class_index,
                "style": style.display_name,
                "source": source.display_name,
                "probability": float(prob),
            }
        )
    return {
        "top_k": entries,
        "probs": [float(p) for p in prediction.probs],
        "style_marginals": [float(p) for p in prediction.style_marginals],
        "source_marginals": [float(p) for p in prediction.source_marginals],
        "predicted_source": prediction.predicted_source.display_name,
        "predicted_style": prediction.predicted_style.display_name,
        "contrast_percent": contrast_percent,
        "model_version": predictor.model_version,
        "mapping_version": predictor.mapping_version,
    }


def create_app(
    config: ServiceConfig | None = None,
    predictor: Predictor | None = None,
    clock=time.time,
) -> FastAPI:
    config = config or ServiceConfig()
    if predictor is None and config.weights_path:
        predictor = Predictor.from_archive(config.weights_path)

    app = FastAPI(title="artbrain", docs_url=None, redoc_url=None)
    store = SessionStore(config.session_db_path)
    limiter = RateLimiter(config.rate_limit_per_minute, clock)
    pool: list[dict] = []
    if config.pool_dir is not None:
        pool = build_question_pool(config.pool_dir, config.pool_seed)
    pool_root = Path(config.pool_dir) if config.pool_dir is not None else None
    model_score_cache: dict = {}

    def require_predictor() -> Predictor:
        if predictor is None:
            raise HTTPException(status_code=503, detail="no model weights loaded")
        return predictor

    def check_rate(request: Request):
        key = request.client.host if request.client else "anonymous"
        if not limiter.allow(key):
            raise HTTPException(status_code=429, detail="rate limit exceeded")

    async def read_upload(file: UploadFile) -> bytes:
        payload = await file.read()
        if len(payload) > config.max_upload_bytes:
            raise HTTPException(
                status_code=413,
                detail=f"upload exceeds {config.max_upload_bytes} bytes",
            )
        return payload

    def decode_or_400(payload: bytes) -> np.ndarray:
        try:
            return decode_image(payload)
        except FormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    def check_contrast(contrast_percent: float):
        if not -100.0 <= contrast_percent <= 100.0:
            raise HTTPException(
                status_code=400,
                detail=f"contrast_percent must lie in [-100, 100], got {contrast_percent}",
            )

    @app.get("/api/health")
    def health():
        return {
            "status": "ok" if predictor is not None else "degraded",
            "model_version": predictor.model_version if predictor is not None else None,
        }

    @app.post("/api/predict")
    async def predict(
        request: Request,
        image: UploadFile = File(...),
        contrast_percent: float = Form(0.0),
    ):
        check_rate(request)
        active = require_predictor()
        check_contrast(contrast_percent)
        raster = decode_or_400(await read_upload(image))
        try:
            prediction = active.predict(raster, k=3, contrast_percent=contrast_percent)
        except (DataError, FormatError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return JSONResponse(_prediction_payload(prediction, active, contrast_percent))

    @app.post("/api/saliency")
    async def saliency(
        request: Request,
        image: UploadFile = File(...),
        k: int = Form(3),
        contrast_percent: float = Form(0.0),
        alpha: float = Form(DEFAULT_OVERLAY_ALPHA),
    ):
        check_rate(request)
        active = require_predictor()
        check_contrast(contrast_percent)
        if not 1 <= k <= labels.NUM_CLASSES:
            raise HTTPException(
                status_code=400, detail=f"k must lie in [1, {labels.NUM_CLASSES}], got {k}"
            )
        if not 0.0 <= alpha <= 1.0:
            raise HTTPException(status_code=400, detail=f"alpha must lie in [0, 1], got {alpha}")
        raster = decode_or_400(await read_upload(image))
        tensor = preprocess(raster, active.preprocess_config, contrast_percent=contrast_percent)
        fused = fm_g_cam(active.model, tensor, k=k)
        # Overlay on the displayed pixels: geometry + contrast, no normalization.
        side = active.preprocess_config.target_side
        display01 = adjust_contrast(
            resize_and_crop(raster, side).astype(np.float64) / 255.0, contrast_percent
        )
        display = np.clip(np.round(display01 * 255.0), 0, 255).astype(np.uint8)
        blended = overlay(display, fused, alpha)
        buffer = io.BytesIO()
        Image.fromarray(blended, mode="RGB").save(buffer, format="PNG")
        payload = _prediction_payload(fused.prediction, active, contrast_percent)
        return JSONResponse(
            {
                "legend": fused.legend,
                "overlay_png_base64": base64.b64encode(buffer.getvalue()).decode("ascii"),
                "prediction": payload,
                "alpha": alpha,
            }
        )

    def get_session_or_404(session_id: str) -> dict:
        session = store.get_session(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def check_deadline(session: dict):
        if clock() > session["created_at"] + SESSION_TIME_LIMIT_S:
            raise HTTPException(status_code=410, detail="session deadline has passed")

    @app.post("/api/turing/session")
    def create_session(body: IntakeBody):
        if not pool:
            raise HTTPException(status_code=503, detail="study image pool not configured")
        ai = _parse_level(body.ai_knowledge)
        human = _parse_level(body.human_knowledge)
        created_at = clock()
        session_id = uuid.uuid4().hex
        order = session_order(session_id, len(pool))
        questions = []
        for position, pool_index in enumerate(order):
            entry = pool[pool_index]
            question_id = hashlib.sha256(
                f"{session_id}:{position}".encode()
            ).hexdigest()[:12]
            questions.append(
                {
                    "question_id": question_id,
                    "path": entry["path"],
                    "truth": entry["truth"],
                }
            )
        store.create_session(session_id, ai, human, questions, created_at)
        return {
            "session_id": session_id,
            "time_limit_s": int(SESSION_TIME_LIMIT_S),
            "question_count": len(questions),
            "questions": [
                {
                    "question_id": q["question_id"],
                    "image_url": f"/api/turing/session/{session_id}/image/{q['question_id']}",
                }
                for q in questions
            ],
        }

    @app.get("/api/turing/session/{session_id}/image/{question_id}")
    def question_image(session_id: str, question_id: str):
        session = get_session_or_404(session_id)
        for question in session["questions"]:
            if question["question_id"] == question_id:
                image_path = pool_root / question["path"]
                return Response(content=image_path.read_bytes(), media_type="image/jpeg")
        raise HTTPException(status_code=404, detail=f"unknown question {question_id!r}")

    @app.post("/api/turing/session/{session_id}/answer")
    def answer_question(session_id: str, body: AnswerBody):
        session = get_session_or_404(session_id)
        check_deadline(session)
        if session["submitted"]:
            raise HTTPException(status_code=409, detail="session already submitted")
        if body.answer not in (HUMAN_ANSWER, MACHINE_ANSWER, SKIP_ANSWER):
            raise HTTPException(
                status_code=400,
                detail=f"answer must be {HUMAN_ANSWER!r}, {MACHINE_ANSWER!r} "
                f"or {SKIP_ANSWER!r}",
            )
        if body.question_id not in {q["question_id"] for q in session["questions"]}:
            raise HTTPException(status_code=404, detail=f"unknown question {body.question_id!r}")
        if not store.record_answer(session_id, body.question_id, body.answer):
            raise HTTPException(
                status_code=409, detail=f"question {body.question_id!r} already answered"
            )
        return {"answered": len(store.answers_for(session_id))}

    @app.post("/api/turing/session/{session_id}/submit")
    def submit_session(session_id: str):
        session = get_session_or_404(session_id)
        check_deadline(session)
        if session["submitted"]:
            raise HTTPException(status_code=409, detail="session already submitted")
        answered = store.answers_for(session_id)
        missing = [
            q["question_id"] for q in session["questions"] if q["question_id"] not in answered
        ]
        if missing:
            raise HTTPException(
                status_code=400,
                detail=f"{len(missing)} questions are still unanswered",
            )
        answers = [answered[q["question_id"]] for q in session["questions"]]
        truth = [q["truth"] for q in session["questions"]]
        elapsed_s = clock() - session["created_at"]
        store.mark_submitted(session, answers, truth, elapsed_s)
        score = score_answers(answers, truth)
        return {
            **score,
            "elapsed_s": elapsed_s,
            "review": [
                {
                    "question_id": q["question_id"],
                    "answer": answered[q["question_id"]],
                    "truth": q["truth"],
                }
                for q in session["questions"]
            ],
        }

    def model_pool_score() -> dict | None:
        """The model's own human/machine accuracy over the study pool, cached."""
        if predictor is None or not pool:
            return None
        if "score" not in model_score_cache:
            correct = 0
            for entry in pool:
                with open(pool_root / entry["path"], "rb") as handle:
                    raster = decode_image(handle.read())
                prediction = predictor.predict(raster)
                verdict = (
                    HUMAN_ANSWER
                    if prediction.predicted_source is labels.Source.HUMAN
                    else MACHINE_ANSWER
                )
                correct += verdict == entry["truth"]
            model_score_cache["score"] = {
                "correct": correct,
                "total": len(pool),
                "percent": format_percent(correct, len(pool)),
            }
        return model_score_cache["score"]

    @app.get("/api/turing/matrix")
    def matrix():
        responses = store.all_responses()
        if not responses:
            payload = {"cells": [], "overall": {"count": 0, "accuracy_percent": None}}
        else:
            payload = turing_matrix(responses).to_json_dict()
        payload["model"] = model_pool_score()
        return payload

    @app.exception_handler(ArtbrainError)
    def domain_error_handler(request: Request, exc: ArtbrainError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True), name="static")

    return app
