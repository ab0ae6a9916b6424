"""Reasoning-quality metrics over precomputed sidecar files.

Five scores, all in [0, 1], all larger-is-better, computed from a
sidecar of model-derived quantities (embeddings, contradiction
probabilities, token log-probabilities) so the math here stays free of
any model inference:

* faithfulness_step:    mean over steps of (1 + best cosine against any
                        gold rationale step) / 2
* informativeness_path: (1 + cosine(path embedding, source embedding)) / 2
* consistency_steps:    1 - max contradiction probability over ordered
                        step pairs (j earlier than i)
* consistency_path:     1 - max contradiction probability of any step
                        against any gold rationale step
* perplexity_path:      reciprocal perplexity exp(mean of token natural
                        log-probabilities)

Sidecars hold only real (non-pad) steps; padding is a calibration
bookkeeping device, not content, so it never reaches these kernels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .ensemble import Diagnostic
from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptySource,
    EmptyTokens,
    NoRealSteps,
    PositiveLogProb,
    SchemaViolation,
    ZeroVector,
)

UNIT_NORM_TOLERANCE = 1e-6

FLAG_SINGLE_STEP = "single_step"
FLAG_NO_SOURCE = "no_source"

HEADER_TYPE = "header"
RECORD_TYPE = "sidecar"


@dataclass(frozen=True)
class ScoreSidecar:
    """All model-derived inputs for one (question, path) pair."""

    question_id: str
    path_index: int
    step_embeddings: np.ndarray           # (n_steps, dim), unit rows
    source_step_embeddings: np.ndarray    # (n_source, dim), unit rows
    path_embedding: np.ndarray            # (dim,), unit
    source_embedding: np.ndarray | None   # (dim,), unit, None without gold
    contradiction_within: np.ndarray      # (n_steps, n_steps) in [0,1]
    contradiction_vs_source: np.ndarray   # (n_steps, n_source) in [0,1]
    token_logprobs: np.ndarray            # (n_tokens,), all <= 0

    @property
    def n_steps(self) -> int:
        return int(self.step_embeddings.shape[0])

    @property
    def n_source_steps(self) -> int:
        return int(self.source_step_embeddings.shape[0])

    def validate(self) -> None:
        """Raise on any invariant violation."""
        if self.step_embeddings.ndim != 2 or self.n_steps < 1:
            raise SchemaViolation("step_embeddings must be a (n_steps, dim) matrix")
        dim = self.step_embeddings.shape[1]
        _check_unit_rows(self.step_embeddings, "step_embeddings")
        if self.n_source_steps:
            if self.source_step_embeddings.shape[1] != dim:
                raise DimensionMismatch("source embedding dimension differs")
            _check_unit_rows(self.source_step_embeddings, "source_step_embeddings")
        if self.path_embedding.shape != (dim,):
            raise DimensionMismatch("path_embedding dimension differs")
        _check_unit_rows(self.path_embedding[None, :], "path_embedding")
        if self.source_embedding is not None:
            if self.source_embedding.shape != (dim,):
                raise DimensionMismatch("source_embedding dimension differs")
            _check_unit_rows(self.source_embedding[None, :], "source_embedding")
        if self.contradiction_within.shape != (self.n_steps, self.n_steps):
            raise DimensionMismatch("contradiction_within must be n_steps x n_steps")
        expected = (self.n_steps, self.n_source_steps)
        if self.n_source_steps:
            if self.contradiction_vs_source.shape != expected:
                raise DimensionMismatch("contradiction_vs_source must be n_steps x n_source")
        elif self.contradiction_vs_source.size:
            raise DimensionMismatch("contradiction_vs_source given without source steps")
        for name, matrix in (
            ("contradiction_within", self.contradiction_within),
            ("contradiction_vs_source", self.contradiction_vs_source),
        ):
            if matrix.size and (matrix.min() < 0.0 or matrix.max() > 1.0):
                raise SchemaViolation(f"{name} entries must lie in [0, 1]")
        if self.token_logprobs.size == 0:
            raise EmptyTokens("token_logprobs is empty")
        if self.token_logprobs.max(initial=-math.inf) > 0.0:
            raise PositiveLogProb("token log-probabilities must be <= 0")


def _check_unit_rows(matrix: np.ndarray, name: str) -> None:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise SchemaViolation(f"{name} rows must be unit-norm (worst deviation {worst:.2e})")


@dataclass(frozen=True)
class MetricReport:
    """The five scores plus counting context for one path (or a mean)."""

    faithfulness_step: float | None
    informativeness_path: float | None
    consistency_steps: float
    consistency_path: float | None
    perplexity_path: float
    n_steps: int
    n_tokens: int
    question_id: str | None = None
    flags: tuple[str, ...] = ()

    def scores(self) -> dict[str, float | None]:
        return {
            "faithfulness": self.faithfulness_step,
            "informativeness": self.informativeness_path,
            "consistency_steps": self.consistency_steps,
            "consistency_path": self.consistency_path,
            "perplexity": self.perplexity_path,
        }


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Standard cosine similarity, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"cosine over shapes {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine is undefined for zero-norm vectors")
    return float(np.clip(float(np.dot(u, v)) / (nu * nv), -1.0, 1.0))


def r_align(
    step_embedding: Sequence[float] | np.ndarray,
    source_step_embeddings: Sequence[Sequence[float]] | np.ndarray,
) -> float:
    """(1 + best cosine against any source step) / 2, in [0, 1]."""
    source = np.asarray(source_step_embeddings, dtype=float)
    if source.ndim != 2 or source.shape[0] == 0:
        raise EmptySource("r_align needs at least one source step")
    best = max(cosine(step_embedding, row) for row in source)
    return (1.0 + best) / 2.0


def faithfulness_step(sidecar: ScoreSidecar) -> float:
    """Mean step-to-source alignment over the path's real steps."""
    if sidecar.n_steps < 1:
        raise NoRealSteps("no real steps in sidecar")
    if sidecar.n_source_steps < 1:
        raise EmptySource("faithfulness needs gold rationale steps")
    steps = sidecar.step_embeddings
    source = sidecar.source_step_embeddings
    norms = np.linalg.norm(steps, axis=1)[:, None] * np.linalg.norm(source, axis=1)[None, :]
    if np.any(norms == 0.0):
        raise ZeroVector("zero-norm embedding in sidecar")
    sims = np.clip((steps @ source.T) / norms, -1.0, 1.0)
    return float(np.mean((1.0 + sims.max(axis=1)) / 2.0))


def informativeness_path(sidecar: ScoreSidecar) -> float:
    """(1 + cosine(path, source)) / 2."""
    if sidecar.source_embedding is None:
        raise EmptySource("informativeness needs a source embedding")
    return (1.0 + cosine(sidecar.path_embedding, sidecar.source_embedding)) / 2.0


def consistency_steps(sidecar: ScoreSidecar) -> float:
    """1 - max contradiction over ordered real-step pairs (earlier, later).

    A single-step path has no pair to contradict; the score is 1.0 and
    the report carries a degeneracy flag.
    """
    n = sidecar.n_steps
    if n < 2:
        return 1.0
    # entry (i, j) judges later step i as hypothesis against earlier step j,
    # so only the strict lower triangle participates
    rows, cols = np.tril_indices(n, k=-1)
    return 1.0 - float(sidecar.contradiction_within[rows, cols].max())


def consistency_path(sidecar: ScoreSidecar) -> float:
    """1 - max contradiction of any real step against any source step."""
    if sidecar.n_source_steps < 1 or sidecar.contradiction_vs_source.size == 0:
        raise EmptySource("consistency_path needs source steps")
    return 1.0 - float(sidecar.contradiction_vs_source.max())


def perplexity_path(token_logprobs: Sequence[float] | np.ndarray) -> float:
    """Reciprocal perplexity exp(mean logprob), in (0, 1]."""
    values = np.asarray(token_logprobs, dtype=float)
    if values.size == 0:
        raise EmptyTokens("no token log-probabilities")
    if float(values.max()) > 0.0:
        raise PositiveLogProb("token log-probabilities must be <= 0")
    return float(math.exp(float(values.mean())))


def compute_metric_report(sidecar: ScoreSidecar) -> MetricReport:
    """All five scores for one sidecar; source-anchored ones None without gold."""
    flags: list[str] = []
    has_source = sidecar.n_source_steps > 0 and sidecar.source_embedding is not None
    if not has_source:
        flags.append(FLAG_NO_SOURCE)
    if sidecar.n_steps < 2:
        flags.append(FLAG_SINGLE_STEP)
    return MetricReport(
        faithfulness_step=faithfulness_step(sidecar) if has_source else None,
        informativeness_path=informativeness_path(sidecar) if has_source else None,
        consistency_steps=consistency_steps(sidecar),
        consistency_path=consistency_path(sidecar) if has_source else None,
        perplexity_path=perplexity_path(sidecar.token_logprobs),
        n_steps=sidecar.n_steps,
        n_tokens=int(sidecar.token_logprobs.size),
        question_id=sidecar.question_id,
        flags=tuple(flags),
    )


def aggregate_metrics(reports: Sequence[MetricReport]) -> MetricReport:
    """Unweighted mean per metric across reports.

    None entries (paths without gold rationale) are excluded from their
    metric's mean; a metric that is None everywhere stays None.
    """
    if not reports:
        raise EmptyInput("no reports to aggregate")

    def mean_of(values: list[float | None]) -> float | None:
        present = [v for v in values if v is not None]
        return sum(present) / len(present) if present else None

    return MetricReport(
        faithfulness_step=mean_of([r.faithfulness_step for r in reports]),
        informativeness_path=mean_of([r.informativeness_path for r in reports]),
        consistency_steps=float(sum(r.consistency_steps for r in reports) / len(reports)),
        consistency_path=mean_of([r.consistency_path for r in reports]),
        perplexity_path=float(sum(r.perplexity_path for r in reports) / len(reports)),
        n_steps=sum(r.n_steps for r in reports),
        n_tokens=sum(r.n_tokens for r in reports),
        question_id=None,
        flags=(),
    )


@dataclass(frozen=True)
class SidecarHeader:
    """Provenance record leading a sidecar file."""

    embedding_dim: int
    producer: str
    embedding_model: str | None = None
    nli_model: str | None = None
    lm_model: str | None = None
    normalized: bool = True
    tool_version: str | None = None


@dataclass
class SidecarLoadResult:
    header: SidecarHeader | None = None
    sidecars: list[ScoreSidecar] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __iter__(self):
        return iter(self.sidecars)

    def __len__(self) -> int:
        return len(self.sidecars)


def _vector(value: object, name: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(x, (int, float)) for x in value):
        raise SchemaViolation(f"{name} must be an array of numbers")
    return np.asarray(value, dtype=float)


def _matrix(value: object, name: str) -> np.ndarray:
    if not isinstance(value, list):
        raise SchemaViolation(f"{name} must be an array of arrays")
    if not value:
        return np.zeros((0, 0))
    rows = []
    width = None
    for row in value:
        if not isinstance(row, list) or not all(isinstance(x, (int, float)) for x in row):
            raise SchemaViolation(f"{name} rows must be arrays of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaViolation(f"{name} rows have ragged lengths")
        rows.append(row)
    return np.asarray(rows, dtype=float)


def sidecar_from_record(record: dict) -> ScoreSidecar:
    """Build and validate a ScoreSidecar from one parsed JSON record."""
    for key in ("question_id", "path_index", "step_embeddings", "path_embedding",
                "contradiction_within", "token_logprobs"):
        if key not in record:
            raise SchemaViolation(f"missing field {key!r}")
    source_vec = record.get("source_embedding")
    sidecar = ScoreSidecar(
        question_id=str(record["question_id"]),
        path_index=int(record["path_index"]),
        step_embeddings=_matrix(record["step_embeddings"], "step_embeddings"),
        source_step_embeddings=_matrix(
            record.get("source_step_embeddings", []), "source_step_embeddings"
        ),
        path_embedding=_vector(record["path_embedding"], "path_embedding"),
        source_embedding=_vector(source_vec, "source_embedding")
        if source_vec is not None
        else None,
        contradiction_within=_matrix(record["contradiction_within"], "contradiction_within"),
        contradiction_vs_source=_matrix(
            record.get("contradiction_vs_source", []), "contradiction_vs_source"
        ),
        token_logprobs=_vector(record["token_logprobs"], "token_logprobs"),
    )
    sidecar.validate()
    return sidecar


def load_sidecars(stream: Iterable[str] | IO[str]) -> SidecarLoadResult:
    """Read a sidecar file: header record first, then one record per path."""
    result = SidecarLoadResult()
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            result.diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc}"))
            continue
        if not isinstance(record, dict):
            result.diagnostics.append(Diagnostic(line_no, "record is not an object"))
            continue
        if record.get("type") == HEADER_TYPE:
            if result.header is not None:
                result.diagnostics.append(Diagnostic(line_no, "duplicate header record"))
                continue
            try:
                result.header = SidecarHeader(
                    embedding_dim=int(record["embedding_dim"]),
                    producer=str(record["producer"]),
                    embedding_model=record.get("embedding_model"),
                    nli_model=record.get("nli_model"),
                    lm_model=record.get("lm_model"),
                    normalized=bool(record.get("normalized", True)),
                    tool_version=record.get("tool_version"),
                )
            except (KeyError, ValueError, TypeError) as exc:
                result.diagnostics.append(Diagnostic(line_no, f"bad header: {exc}"))
            continue
        try:
            sidecar = sidecar_from_record(record)
        except (SchemaViolation, DimensionMismatch, EmptyTokens, PositiveLogProb) as exc:
            result.diagnostics.append(
                Diagnostic(line_no, f"{type(exc).__name__}: {exc}",
                           question_id=record.get("question_id"))
            )
            continue
        if result.header is not None and sidecar.step_embeddings.shape[1] != result.header.embedding_dim:
            result.diagnostics.append(
                Diagnostic(line_no, "embedding dimension differs from header",
                           question_id=sidecar.question_id)
            )
            continue
        result.sidecars.append(sidecar)
    if result.header is None:
        result.diagnostics.append(Diagnostic(0, "sidecar file has no header record"))
    return result


def write_sidecars(
    header: SidecarHeader, sidecars: Iterable[ScoreSidecar], stream: IO[str]
) -> int:
    """Serialize a header plus sidecar records; the exporter's twin."""
    stream.write(
        json.dumps(
            {
                "type": HEADER_TYPE,
                "embedding_dim": header.embedding_dim,
                "producer": header.producer,
                "embedding_model": header.embedding_model,
                "nli_model": header.nli_model,
                "lm_model": header.lm_model,
                "normalized": header.normalized,
                "tool_version": header.tool_version,
            },
            ensure_ascii=False,
        )
        + "\n"
    )
    count = 0
    for s in sidecars:
        record = {
            "type": RECORD_TYPE,
            "question_id": s.question_id,
            "path_index": s.path_index,
            "step_embeddings": s.step_embeddings.tolist(),
            "source_step_embeddings": s.source_step_embeddings.tolist(),
            "path_embedding": s.path_embedding.tolist(),
            "source_embedding": None
            if s.source_embedding is None
            else s.source_embedding.tolist(),
            "contradiction_within": s.contradiction_within.tolist(),
            "contradiction_vs_source": s.contradiction_vs_source.tolist(),
            "token_logprobs": s.token_logprobs.tolist(),
        }
        stream.write(json.dumps(record, ensure_ascii=False) + "\n")
        count += 1
    return count
