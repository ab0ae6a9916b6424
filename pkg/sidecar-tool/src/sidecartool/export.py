"""Read ensemble files, run the providers, write metric sidecar files.

The output is line-delimited JSON: a header record carrying the provider
manifest, then one record per (question, path) in input order. The record
layout is the one the metrics consumer reads back:

    {"type": "header", "embedding_dim": ..., "producer": "sidecartool",
     "embedding_model": ..., "nli_model": ..., "lm_model": ...,
     "normalized": true, "tool_version": ...}
    {"type": "sidecar", "question_id": ..., "path_index": ...,
     "step_embeddings": [[...]], "source_step_embeddings": [[...]],
     "path_embedding": [...], "source_embedding": [...] | null,
     "contradiction_within": [[...]], "contradiction_vs_source": [[...]],
     "token_logprobs": [...]}

Contradiction matrices are oriented rows = later/generated step
(hypothesis), columns = earlier/source step (premise). Questions without
a gold rationale still export, with empty source fields and a diagnostic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from . import __version__
from .errors import SchemaViolation
from .providers import ContradictionScorer, Embedder, TokenScorer

HEADER_TYPE = "header"
RECORD_TYPE = "sidecar"
PRODUCER = "sidecartool"

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class ProviderManifest:
    """What produced a sidecar file; written as its header record."""

    embedding_model: str
    nli_model: str
    lm_model: str
    embedding_dim: int
    normalized: bool = True
    tool_version: str = __version__

    def header_record(self) -> dict:
        return {
            "type": HEADER_TYPE,
            "embedding_dim": self.embedding_dim,
            "producer": PRODUCER,
            "embedding_model": self.embedding_model,
            "nli_model": self.nli_model,
            "lm_model": self.lm_model,
            "normalized": self.normalized,
            "tool_version": self.tool_version,
        }


@dataclass(frozen=True)
class Diagnostic:
    line_no: int
    message: str
    question_id: str | None = None

    def __str__(self) -> str:
        # line_no 0 marks export-time diagnostics with no input line
        parts = []
        if self.line_no:
            parts.append(f"line {self.line_no}")
        if self.question_id:
            parts.append(self.question_id)
        prefix = " ".join(parts)
        return f"{prefix}: {self.message}" if prefix else self.message


@dataclass
class QuestionPaths:
    """One question's paths, reduced to what the providers consume."""

    question_id: str
    steps_per_path: list[list[str]]
    path_texts: list[str]
    gold_steps: list[str] | None = None


def split_steps(raw_text: str) -> list[str]:
    """Fallback segmentation: lines first, then sentence boundaries."""
    pieces: list[str] = []
    for line in raw_text.splitlines():
        pieces.extend(p.strip() for p in _SENTENCE_SPLIT.split(line))
    return [p for p in pieces if p]


def _path_fields(path: object) -> tuple[list[str], str]:
    if not isinstance(path, dict):
        raise SchemaViolation("path entries must be objects")
    raw_text = path.get("raw_text", "")
    if not isinstance(raw_text, str):
        raise SchemaViolation("raw_text must be a string")
    steps = path.get("steps")
    if steps is None:
        texts = split_steps(raw_text)
    else:
        if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
            raise SchemaViolation("steps must be an array of strings")
        texts = [s.strip() for s in steps if s.strip()]
    path_text = raw_text.strip() or " ".join(texts)
    return texts, path_text


def read_ensembles(stream: Iterable[str] | IO[str]) -> tuple[list[QuestionPaths], list[Diagnostic]]:
    """Parse the ensemble file down to step texts, skipping bad lines."""
    questions: list[QuestionPaths] = []
    seen: set[str] = set()
    diagnostics: list[Diagnostic] = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc}"))
            continue
        if not isinstance(record, dict):
            diagnostics.append(Diagnostic(line_no, "record is not an object"))
            continue
        question_id = record.get("question_id")
        paths = record.get("paths")
        if not isinstance(question_id, str) or not question_id:
            diagnostics.append(Diagnostic(line_no, "missing question_id"))
            continue
        if not isinstance(paths, list) or not paths:
            diagnostics.append(Diagnostic(line_no, "paths must be a non-empty array",
                                          question_id))
            continue
        if question_id in seen:
            diagnostics.append(Diagnostic(line_no, "duplicate question_id, keeping first",
                                          question_id))
            continue
        try:
            parsed = [_path_fields(p) for p in paths]
        except SchemaViolation as exc:
            diagnostics.append(Diagnostic(line_no, str(exc), question_id))
            continue
        gold = record.get("gold_rationale_steps")
        gold_steps = None
        if isinstance(gold, list):
            gold_steps = [s.strip() for s in gold if isinstance(s, str) and s.strip()] or None
        seen.add(question_id)
        questions.append(
            QuestionPaths(
                question_id=question_id,
                steps_per_path=[steps for steps, _ in parsed],
                path_texts=[text for _, text in parsed],
                gold_steps=gold_steps,
            )
        )
    return questions, diagnostics


def read_gold(stream: Iterable[str] | IO[str]) -> tuple[dict[str, list[str]], list[Diagnostic]]:
    """Parse a gold-rationale file: {"question_id": ..., "steps": [...]}."""
    gold: dict[str, list[str]] = {}
    diagnostics: list[Diagnostic] = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc}"))
            continue
        question_id = record.get("question_id") if isinstance(record, dict) else None
        steps = record.get("steps") if isinstance(record, dict) else None
        if not isinstance(question_id, str) or not isinstance(steps, list):
            diagnostics.append(Diagnostic(line_no, "need question_id and steps"))
            continue
        cleaned = [s.strip() for s in steps if isinstance(s, str) and s.strip()]
        if not cleaned:
            diagnostics.append(Diagnostic(line_no, "steps are all blank", question_id))
            continue
        if question_id in gold:
            diagnostics.append(Diagnostic(line_no, "duplicate question_id, keeping first",
                                          question_id))
            continue
        gold[question_id] = cleaned
    return gold, diagnostics


@dataclass
class ExportResult:
    questions: int = 0
    records: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)


def export_sidecars(
    questions: Iterable[QuestionPaths],
    out: IO[str],
    *,
    embedder: Embedder,
    contradiction: ContradictionScorer,
    token_scorer: TokenScorer,
    gold_overrides: dict[str, list[str]] | None = None,
) -> ExportResult:
    """Write the header plus one record per (question, path).

    Gold rationales resolve per question: the overrides mapping wins when
    it has the question, the question's own inline gold_steps otherwise.
    Paths whose step list came out empty keep their index but are skipped
    with a diagnostic, so join keys stay aligned with the input file.
    """
    manifest = ProviderManifest(
        embedding_model=embedder.model_id,
        nli_model=contradiction.model_id,
        lm_model=token_scorer.model_id,
        embedding_dim=embedder.dimension,
    )
    out.write(json.dumps(manifest.header_record(), ensure_ascii=False) + "\n")

    result = ExportResult()
    for question in questions:
        result.questions += 1
        if gold_overrides is not None and question.question_id in gold_overrides:
            gold_steps = gold_overrides[question.question_id]
        else:
            gold_steps = question.gold_steps
        if gold_steps is None:
            result.diagnostics.append(
                Diagnostic(0, "no gold rationale; source fields left empty",
                           question.question_id)
            )
            source_rows: list[list[float]] = []
            source_vector = None
        else:
            source_rows = embedder.embed(gold_steps).tolist()
            source_vector = embedder.embed([" ".join(gold_steps)])[0].tolist()

        for path_index, (steps, path_text) in enumerate(
            zip(question.steps_per_path, question.path_texts)
        ):
            if not steps:
                result.diagnostics.append(
                    Diagnostic(0, f"path {path_index} has no steps, skipped",
                               question.question_id)
                )
                continue
            logprobs = token_scorer.token_logprobs(path_text)
            if logprobs.size == 0:
                result.diagnostics.append(
                    Diagnostic(0, f"path {path_index} produced no scored tokens, skipped",
                               question.question_id)
                )
                continue
            record = {
                "type": RECORD_TYPE,
                "question_id": question.question_id,
                "path_index": path_index,
                "step_embeddings": embedder.embed(steps).tolist(),
                "source_step_embeddings": source_rows,
                "path_embedding": embedder.embed([path_text])[0].tolist(),
                "source_embedding": source_vector,
                "contradiction_within": contradiction.matrix(steps, steps).tolist(),
                "contradiction_vs_source": contradiction.matrix(gold_steps, steps).tolist()
                if gold_steps is not None
                else [],
                "token_logprobs": logprobs.tolist(),
            }
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
            result.records += 1
    return result


def export_file(
    ensembles_path: Path,
    out_path: Path,
    *,
    embedder: Embedder,
    contradiction: ContradictionScorer,
    token_scorer: TokenScorer,
    gold_path: Path | None = None,
) -> ExportResult:
    """File-level wrapper around export_sidecars."""
    gold_overrides = None
    gold_diags: list[Diagnostic] = []
    if gold_path is not None:
        with gold_path.open(encoding="utf-8") as fh:
            gold_overrides, gold_diags = read_gold(fh)
    with ensembles_path.open(encoding="utf-8") as fh:
        questions, read_diags = read_ensembles(fh)
    with out_path.open("w", encoding="utf-8") as fh:
        result = export_sidecars(
            questions,
            fh,
            embedder=embedder,
            contradiction=contradiction,
            token_scorer=token_scorer,
            gold_overrides=gold_overrides,
        )
    result.diagnostics = gold_diags + read_diags + result.diagnostics
    return result
