"""Reasoning-path data model, path shaping, and the ensemble file loader.

A question is answered by N candidate reasoning paths. Every path is
shaped to exactly M steps: longer paths keep their first M steps, shorter
ones are padded with empty pad steps at the tail. Shaping never touches
the stated final answer; the pre-shaping step count is kept on the path.

The on-disk ensemble format is UTF-8 line-delimited JSON, one question per
line:

    {"question_id": "q1", "question": "...", "answer_kind": "numeric",
     "paths": [{"raw_text": "...", "steps": [...], "step_answers": [...],
                "final_answer": "..."}],
     "gold_answer": "...", "gold_rationale_steps": ["...", "..."]}

``steps`` and ``final_answer`` are optional; the loader derives them from
``raw_text`` via segment_steps / extract_final_answer when absent.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable

from .answers import (
    ANSWER_KINDS,
    NormalizedAnswer,
    extract_final_answer,
    normalize_answer,
    segment_steps,
)
from .errors import InvalidShape, SchemaViolation, UnparseableAnswer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReasoningStep:
    index: int  # 1-based position within the shaped path
    text: str
    answer: NormalizedAnswer | None = None
    is_pad: bool = False

    def __post_init__(self) -> None:
        if self.is_pad and (self.text or self.answer is not None):
            raise InvalidShape("pad steps carry no text and no answer")


@dataclass(frozen=True)
class ReasoningPath:
    steps: tuple[ReasoningStep, ...]
    final_answer: NormalizedAnswer
    raw_text: str
    true_step_count: int

    def __post_init__(self) -> None:
        if self.true_step_count < 1:
            raise InvalidShape("a path needs at least one real step")
        pad_seen = False
        for step in self.steps:
            if step.is_pad:
                pad_seen = True
            elif pad_seen:
                raise InvalidShape("pad steps must form a contiguous tail")

    @property
    def real_step_count(self) -> int:
        """Number of non-pad steps actually present after shaping."""
        return sum(1 for s in self.steps if not s.is_pad)


@dataclass(frozen=True)
class PathEnsemble:
    question_id: str
    question: str
    paths: tuple[ReasoningPath, ...]
    gold_answer: NormalizedAnswer | None = None
    gold_rationale_steps: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.paths) < 1:
            raise InvalidShape("an ensemble needs at least one path")
        widths = {len(p.steps) for p in self.paths}
        if len(widths) != 1:
            raise InvalidShape(f"paths shaped to different step budgets: {sorted(widths)}")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def step_budget(self) -> int:
        return len(self.paths[0].steps)

    @property
    def final_answers(self) -> tuple[NormalizedAnswer, ...]:
        return tuple(p.final_answer for p in self.paths)


def shape_path(
    step_texts: list[str],
    final: NormalizedAnswer,
    m: int,
    *,
    step_answers: list[NormalizedAnswer | None] | None = None,
    raw_text: str | None = None,
) -> ReasoningPath:
    """Truncate or pad a step list to exactly ``m`` steps.

    Truncation keeps the first m steps; padding appends empty pad steps.
    The final answer is preserved unchanged either way.
    """
    if m < 1:
        raise InvalidShape(f"step budget must be >= 1, got {m}")
    if not step_texts:
        raise InvalidShape("cannot shape a path with zero steps")
    if step_answers is not None and len(step_answers) != len(step_texts):
        raise InvalidShape("step_answers length differs from step_texts")

    kept = step_texts[:m]
    answers = (step_answers or [None] * len(step_texts))[:m]
    steps = [
        ReasoningStep(index=i + 1, text=text, answer=ans)
        for i, (text, ans) in enumerate(zip(kept, answers))
    ]
    for i in range(len(kept), m):
        steps.append(ReasoningStep(index=i + 1, text="", answer=None, is_pad=True))
    return ReasoningPath(
        steps=tuple(steps),
        final_answer=final,
        raw_text=raw_text if raw_text is not None else "\n".join(step_texts),
        true_step_count=len(step_texts),
    )


@dataclass(frozen=True)
class Diagnostic:
    """One skipped or repaired input record."""

    line_no: int
    message: str
    question_id: str | None = None

    def __str__(self) -> str:
        where = f"line {self.line_no}"
        if self.question_id:
            where += f" ({self.question_id})"
        return f"{where}: {self.message}"


@dataclass
class LoadResult:
    ensembles: list[PathEnsemble] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __iter__(self):
        return iter(self.ensembles)

    def __len__(self) -> int:
        return len(self.ensembles)


def load_ensembles(
    stream: Iterable[str] | IO[str],
    m: int,
    *,
    expected_n: int | None = None,
) -> LoadResult:
    """Load and shape ensembles from line-delimited records.

    Malformed lines are skipped with a diagnostic, never fatal. When
    ``expected_n`` is given, records with a different path count are
    rejected as schema violations.
    """
    if m < 1:
        raise InvalidShape(f"step budget must be >= 1, got {m}")
    result = LoadResult()
    seen_ids: set[str] = set()

    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            result.diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc}"))
            continue
        try:
            ensemble = _ensemble_from_record(record, m, expected_n)
        except (SchemaViolation, UnparseableAnswer, InvalidShape) as exc:
            qid = record.get("question_id") if isinstance(record, dict) else None
            result.diagnostics.append(
                Diagnostic(line_no, f"{type(exc).__name__}: {exc}", question_id=qid)
            )
            continue
        if ensemble.question_id in seen_ids:
            result.diagnostics.append(
                Diagnostic(line_no, "duplicate question_id", question_id=ensemble.question_id)
            )
            continue
        seen_ids.add(ensemble.question_id)
        result.ensembles.append(ensemble)

    for diag in result.diagnostics:
        log.warning("skipped record: %s", diag)
    return result


def _require(record: dict, key: str, types: type | tuple) -> object:
    if key not in record:
        raise SchemaViolation(f"missing field {key!r}")
    value = record[key]
    if not isinstance(value, types):
        raise SchemaViolation(f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _ensemble_from_record(record: object, m: int, expected_n: int | None) -> PathEnsemble:
    if not isinstance(record, dict):
        raise SchemaViolation("record is not an object")
    question_id = str(_require(record, "question_id", (str, int)))
    question = _require(record, "question", str)
    kind = _require(record, "answer_kind", str)
    if kind not in ANSWER_KINDS:
        raise SchemaViolation(f"unknown answer_kind {kind!r}")
    raw_paths = _require(record, "paths", list)
    if not raw_paths:
        raise SchemaViolation("paths is empty")
    if expected_n is not None and len(raw_paths) != expected_n:
        raise SchemaViolation(f"N mismatch: expected {expected_n} paths, got {len(raw_paths)}")

    paths = []
    for i, raw in enumerate(raw_paths):
        if not isinstance(raw, dict):
            raise SchemaViolation(f"paths[{i}] is not an object")
        raw_text = _require(raw, "raw_text", str)
        step_texts = raw.get("steps")
        if step_texts is None:
            step_texts = segment_steps(raw_text)
        elif not (isinstance(step_texts, list) and all(isinstance(s, str) for s in step_texts)):
            raise SchemaViolation(f"paths[{i}].steps must be a list of strings")
        if not step_texts:
            raise SchemaViolation(f"paths[{i}] has zero steps")

        final_raw = raw.get("final_answer")
        if final_raw is not None:
            final = normalize_answer(str(final_raw), kind)
        else:
            final = extract_final_answer(raw_text, kind)
            if final is None:
                raise SchemaViolation(f"paths[{i}] has no extractable final answer")

        step_answers: list[NormalizedAnswer | None] | None = None
        raw_step_answers = raw.get("step_answers")
        if raw_step_answers is not None:
            if not isinstance(raw_step_answers, list) or len(raw_step_answers) != len(step_texts):
                raise SchemaViolation(f"paths[{i}].step_answers length differs from steps")
            step_answers = [
                normalize_answer(str(a), kind) if a is not None else None
                for a in raw_step_answers
            ]
        else:
            step_answers = [extract_final_answer(text, kind) for text in step_texts]

        paths.append(
            shape_path(step_texts, final, m, step_answers=step_answers, raw_text=raw_text)
        )

    gold_raw = record.get("gold_answer")
    gold = normalize_answer(str(gold_raw), kind) if gold_raw is not None else None
    gold_steps = record.get("gold_rationale_steps")
    if gold_steps is not None:
        if not (isinstance(gold_steps, list) and all(isinstance(s, str) for s in gold_steps)):
            raise SchemaViolation("gold_rationale_steps must be a list of strings")
        gold_steps = tuple(gold_steps)

    return PathEnsemble(
        question_id=question_id,
        question=question,
        paths=tuple(paths),
        gold_answer=gold,
        gold_rationale_steps=gold_steps,
    )


def write_ensembles(ensembles: Iterable[PathEnsemble], stream: IO[str]) -> int:
    """Serialize ensembles back to the line-delimited format; returns count."""
    count = 0
    for ens in ensembles:
        record = {
            "question_id": ens.question_id,
            "question": ens.question,
            "answer_kind": ens.paths[0].final_answer.kind,
            "paths": [
                {
                    "raw_text": p.raw_text,
                    "steps": [s.text for s in p.steps if not s.is_pad],
                    "step_answers": [
                        s.answer.canonical if s.answer is not None else None
                        for s in p.steps
                        if not s.is_pad
                    ],
                    "final_answer": p.final_answer.canonical,
                }
                for p in ens.paths
            ],
        }
        if ens.gold_answer is not None:
            record["gold_answer"] = ens.gold_answer.canonical
        if ens.gold_rationale_steps is not None:
            record["gold_rationale_steps"] = list(ens.gold_rationale_steps)
        stream.write(json.dumps(record, ensure_ascii=False) + "\n")
        count += 1
    return count
