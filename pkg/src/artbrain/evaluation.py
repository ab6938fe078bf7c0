"""Metrics and report harness.

Covers the three report families: per-class F1 over the 30-way taxonomy,
3-way source-attribution scores derived from marginal argmax, and the
knowledge-stratified scoring matrix of the human study. Reports are emitted
both as JSON and as aligned text tables.

Percentages are displayed to one decimal with half-up rounding computed on
the exact rational (correct / answered), so table cells are reproducible
from integer counts alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import labels
from .errors import DataError, StateError
from .model import Prediction, prediction_from_probs

QUESTION_COUNT = 50
SESSION_TIME_LIMIT_S = 1200.0
HUMAN_ANSWER = "human"
MACHINE_ANSWER = "machine"
# Explicit forfeit: counts as an answered question, can never match the truth.
SKIP_ANSWER = "skip"


class KnowledgeLevel(enum.IntEnum):
    NOVICE = 0
    BEGINNER = 1
    ADVANCED = 2
    EXPERT = 3

    @property
    def display_name(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class TuringResponse:
    """One anonymized study submission: 50 human/machine guesses plus intake."""

    respondent_id: str
    ai_knowledge: KnowledgeLevel
    human_knowledge: KnowledgeLevel
    answers: tuple[str, ...]
    truth: tuple[str, ...]
    elapsed_s: float

    def __post_init__(self):
        if len(self.answers) != len(self.truth):
            raise DataError(
                f"{len(self.answers)} answers against {len(self.truth)} truth labels"
            )
        if len(self.answers) != QUESTION_COUNT:
            raise DataError(f"a response carries {QUESTION_COUNT} answers, got {len(self.answers)}")
        for value in (*self.answers, *self.truth):
            if value not in (HUMAN_ANSWER, MACHINE_ANSWER):
                raise DataError(f"answers must be {HUMAN_ANSWER!r} or {MACHINE_ANSWER!r}, got {value!r}")
        if self.elapsed_s > SESSION_TIME_LIMIT_S:
            raise DataError(
                f"response took {self.elapsed_s} s, past the {SESSION_TIME_LIMIT_S:.0f} s limit"
            )

    @property
    def correct(self) -> int:
        return sum(a == t for a, t in zip(self.answers, self.truth))

    @property
    def accuracy(self) -> float:
        return self.correct / len(self.answers)


def format_percent(correct: int, total: int) -> str:
    """One-decimal percentage with half-up rounding on the exact fraction."""
    if total <= 0:
        raise ValueError("cannot format a percentage over zero answers")
    value = Decimal(100 * correct) / Decimal(total)
    return str(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def score_answers(answers, truth) -> dict:
    """Submission arithmetic shared with the study service."""
    if len(answers) != len(truth):
        raise DataError(f"{len(answers)} answers against {len(truth)} truth labels")
    correct = sum(a == t for a, t in zip(answers, truth))
    return {
        "correct": correct,
        "total": len(truth),
        "accuracy": correct / len(truth) if truth else 0.0,
        "percent": format_percent(correct, len(truth)) if truth else "0.0",
    }


@dataclass
class ConfusionMatrix:
    """Integer count matrix, rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")

    @classmethod
    def from_predictions(cls, true_classes, predicted_classes, num_classes: int) -> "ConfusionMatrix":
        counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        for t, p in zip(true_classes, predicted_classes, strict=True):
            if not (0 <= t < num_classes and 0 <= p < num_classes):
                raise DataError(f"class pair ({t}, {p}) outside [0, {num_classes - 1}]")
            counts[t, p] += 1
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            raise ValueError("empty confusion matrix has no accuracy")
        return float(np.trace(self.counts)) / self.total

    def collapse_by_source(self) -> "ConfusionMatrix":
        """Fold the 30-way matrix into 3-way source counts."""
        if self.counts.shape[0] != labels.NUM_CLASSES:
            raise ValueError("only the 30-way matrix collapses by source")
        folded = (
            self.counts.reshape(
                labels.NUM_SOURCES, labels.NUM_STYLES, labels.NUM_SOURCES, labels.NUM_STYLES
            )
            .sum(axis=(1, 3))
        )
        return ConfusionMatrix(folded)


def f1_per_class(cm: ConfusionMatrix) -> tuple[np.ndarray, float]:
    """Per-class F1 vector plus micro accuracy (trace over total).

    F1 is 0 by convention when precision and recall are both undefined or 0.
    """
    if cm.total == 0:
        raise ValueError("cannot score an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(col_sums > 0, diag / col_sums, 0.0)
        recall = np.where(row_sums > 0, diag / row_sums, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return f1, cm.accuracy


@dataclass
class AttributionScores:
    confusion: ConfusionMatrix  # 3x3, source order Human/Latent/Stable
    f1: np.ndarray
    accuracy: float
    # Images whose top-class source differs from the marginal argmax; on such
    # images collapsing the 30-way confusion need not match the 3-way one.
    argmax_disagreements: int

    def to_json_dict(self) -> dict:
        return {
            "per_source_f1": {
                # short keys: human / latent / stable
                source.name.lower().split("_")[0]: float(self.f1[source])
                for source in labels.Source
            },
            "overall_accuracy": self.accuracy,
            "confusion": self.confusion.counts.tolist(),
            "argmax_disagreements": self.argmax_disagreements,
        }


def attribution_scores(predictions: list[Prediction], truth_sources) -> AttributionScores:
    """3-way attribution report from marginal-argmax source predictions."""
    if len(predictions) != len(truth_sources):
        raise DataError(f"{len(predictions)} predictions against {len(truth_sources)} sources")
    predicted = []
    disagreements = 0
    for prediction in predictions:
        marginals = getattr(prediction, "source_marginals", None)
        if marginals is None:
            raise StateError("prediction carries no source marginals")
        source = int(np.argmax(marginals))
        predicted.append(source)
        if labels.source_of(prediction.top_class) != source:
            disagreements += 1
    truth = [int(s) for s in truth_sources]
    cm = ConfusionMatrix.from_predictions(truth, predicted, labels.NUM_SOURCES)
    f1, accuracy = f1_per_class(cm)
    return AttributionScores(
        confusion=cm, f1=f1, accuracy=accuracy, argmax_disagreements=disagreements
    )


@dataclass
class TuringCell:
    human_knowledge: KnowledgeLevel
    ai_knowledge: KnowledgeLevel
    respondent_count: int
    correct: int
    answered: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.answered

    @property
    def percent(self) -> str:
        return format_percent(self.correct, self.answered)


@dataclass
class TuringMatrix:
    """Accuracy stratified by (human-art knowledge, AI-art knowledge)."""

    cells: dict[tuple[KnowledgeLevel, KnowledgeLevel], TuringCell]
    overall_correct: int
    overall_answered: int
    respondent_count: int

    @property
    def overall_accuracy(self) -> float:
        return self.overall_correct / self.overall_answered

    @property
    def overall_percent(self) -> str:
        return format_percent(self.overall_correct, self.overall_answered)

    def to_json_dict(self) -> dict:
        return {
            "cells": [
                {
                    "human_knowledge": cell.human_knowledge.display_name,
                    "ai_knowledge": cell.ai_knowledge.display_name,
                    "count": cell.respondent_count,
                    "accuracy_percent": float(cell.percent),
                }
                for _, cell in sorted(self.cells.items())
            ],
            "overall": {
                "count": self.respondent_count,
                "accuracy_percent": float(self.overall_percent),
            },
        }


def turing_matrix(responses: list[TuringResponse]) -> TuringMatrix:
    """Aggregate responses into knowledge-level cells plus an overall row.

    Cell accuracy is the mean over its respondents; since every response
    answers the same number of questions this equals pooled correct/answered,
    and the count-weighted cell mean is exactly the overall accuracy.
    """
    cells: dict[tuple[KnowledgeLevel, KnowledgeLevel], TuringCell] = {}
    overall_correct = 0
    overall_answered = 0
    for response in responses:
        key = (response.human_knowledge, response.ai_knowledge)
        cell = cells.get(key)
        if cell is None:
            cell = TuringCell(
                human_knowledge=key[0],
                ai_knowledge=key[1],
                respondent_count=0,
                correct=0,
                answered=0,
            )
            cells[key] = cell
        cell.respondent_count += 1
        cell.correct += response.correct
        cell.answered += len(response.answers)
        overall_correct += response.correct
        overall_answered += len(response.answers)
    return TuringMatrix(
        cells=cells,
        overall_correct=overall_correct,
        overall_answered=overall_answered,
        respondent_count=len(responses),
    )


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    """Aligned plain-text table."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(line.rstrip() for line in lines)


def classification_report(cm: ConfusionMatrix) -> dict:
    """30-way report: per-class F1, micro accuracy, macro F1."""
    f1, accuracy = f1_per_class(cm)
    support = cm.counts.sum(axis=1)
    per_class = []
    for index in range(cm.counts.shape[0]):
        entry = {"class_index": index, "f1": float(f1[index]), "support": int(support[index])}
        if cm.counts.shape[0] == labels.NUM_CLASSES:
            source, style = labels.parts_of(index)
            entry["source"] = source.display_name
            entry["style"] = style.display_name
        per_class.append(entry)
    return {
        "per_class": per_class,
        "overall_accuracy": accuracy,
        "macro_f1": float(f1.mean()),
        "total": cm.total,
    }


def render_classification_text(report: dict) -> str:
    rows = []
    for entry in report["per_class"]:
        name = (
            f"{entry.get('source', '')} / {entry.get('style', '')}".strip(" /")
            or str(entry["class_index"])
        )
        rows.append([name, f"{entry['f1']:.4f}", str(entry["support"])])
    table = render_table(["Class", "F1", "Support"], rows)
    return (
        f"{table}\n\nOverall accuracy: {report['overall_accuracy']:.4f}"
        f"\nMacro F1: {report['macro_f1']:.4f}"
    )


def render_attribution_text(scores: AttributionScores) -> str:
    rows = [
        [source.display_name, f"{scores.f1[source]:.4f}"]
        for source in labels.Source
    ]
    table = render_table(["Source", "F1"], rows)
    return (
        f"{table}\n\nOverall accuracy: {scores.accuracy:.4f}"
        f"\nTop-class vs marginal argmax disagreements: {scores.argmax_disagreements}"
    )


def render_turing_text(matrix: TuringMatrix) -> str:
    headers = ["Human \\ AI"] + [level.display_name for level in KnowledgeLevel]
    rows = []
    for human_level in KnowledgeLevel:
        row = [human_level.display_name]
        for ai_level in KnowledgeLevel:
            cell = matrix.cells.get((human_level, ai_level))
            row.append("-" if cell is None else f"{cell.percent}% ({cell.respondent_count})")
        rows.append(row)
    table = render_table(headers, rows)
    return (
        f"{table}\n\nOverall: {matrix.overall_percent}% "
        f"({matrix.respondent_count} respondents)"
    )


def evaluate_probabilities(probs: np.ndarray, targets) -> dict:
    """Full report from an (N, 30) probability matrix and true class indices.

    Accuracy is cross-checked sample-wise against the confusion trace, and
    attribution comes from marginal argmax with disagreement accounting.
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[1] != labels.NUM_CLASSES:
        raise DataError(f"expected an (N, {labels.NUM_CLASSES}) probability matrix, got {probs.shape}")
    if len(probs) != len(targets):
        raise DataError(f"{len(probs)} probability rows against {len(targets)} targets")
    predicted = probs.argmax(axis=1)
    cm = ConfusionMatrix.from_predictions(targets.tolist(), predicted.tolist(), labels.NUM_CLASSES)
    samplewise = float((predicted == targets).mean())
    if abs(samplewise - cm.accuracy) > 1e-12:
        raise StateError("sample-wise accuracy disagrees with the confusion trace")

    predictions = [prediction_from_probs(row) for row in probs]
    attribution = attribution_scores(predictions, [labels.source_of(int(t)) for t in targets])
    style_predicted = [labels.style_of(int(p)) for p in predicted]
    style_truth = [labels.style_of(int(t)) for t in targets]
    style_accuracy = float(np.mean([p == t for p, t in zip(style_predicted, style_truth)]))
    report = classification_report(cm)
    return {
        "classification": report,
        "attribution": attribution.to_json_dict(),
        "style_accuracy": style_accuracy,
        "confusion": cm.counts.tolist(),
    }
