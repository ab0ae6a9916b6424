"""Step verdict production: oracle files or backward verification via LLM.

A verdict is one boolean per (path, step) saying whether that intermediate
step was judged correct. Two sources exist:

* an oracle verdict file (line-delimited JSON), used for offline and
  deterministic runs;
* a chat-completion endpoint driven with a backward-verification prompt
  per step: the question is restated with the step's conclusion asserted,
  the derived quantity masked, and the model asked to re-derive it and
  reply starting with "correct" or "incorrect".

Pad steps never reach a verifier and are always recorded false, so
padding cannot inflate a path's verified-step count. Endpoint verdicts
are cached by (question_id, path_index, step_index, template_id,
model_id); a warm cache answers without any network call.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Mapping

import requests

from .ensemble import Diagnostic, PathEnsemble
from .errors import (
    AuthError,
    DimensionMismatch,
    EndpointNotConfigured,
    InvalidTarget,
    MalformedResponse,
    OracleMissing,
    RateLimited,
    SchemaViolation,
    TemplateNotFound,
    TransportError,
)

log = logging.getLogger(__name__)

ENV_BASE = "CALIB_LLM_BASE"
ENV_KEY = "CALIB_LLM_KEY"

SOURCE_ORACLE = "oracle"
SOURCE_LLM = "llm"
SOURCE_SYNTHETIC = "synthetic"

DEFAULT_TEMPLATE_ID = "backward-v1"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}
_LAST_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


@dataclass(frozen=True)
class StepVerdicts:
    question_id: str
    per_path: tuple[tuple[bool, ...], ...]
    source: str = SOURCE_ORACLE

    def m_counts(self) -> list[int]:
        return [sum(row) for row in self.per_path]


@dataclass(frozen=True)
class VerificationRequest:
    question: str
    path_steps: tuple[str, ...]
    target_step: int  # 1-based
    template_id: str = DEFAULT_TEMPLATE_ID

    def __post_init__(self) -> None:
        if not 1 <= self.target_step <= len(self.path_steps):
            raise InvalidTarget(
                f"target step {self.target_step} outside 1..{len(self.path_steps)}"
            )


@dataclass(frozen=True)
class CompletionEnvelope:
    prompt: str
    completion: str
    model_id: str
    latency: float
    cached: bool = False


@dataclass(frozen=True)
class DecodingParams:
    model: str = "default"
    temperature: float = 0.7
    max_tokens: int = 256


def load_oracle_verdicts(
    stream: Iterable[str] | IO[str],
    ensembles: Mapping[str, PathEnsemble] | Iterable[PathEnsemble] | None = None,
) -> tuple[dict[str, StepVerdicts], list[Diagnostic]]:
    """Read a verdict file, validating shapes against companion ensembles.

    Malformed records raise SchemaViolation and shape conflicts with a
    present ensemble raise DimensionMismatch; verdicts for unknown
    questions are skipped with a diagnostic.
    """
    if ensembles is not None and not isinstance(ensembles, Mapping):
        ensembles = {e.question_id: e for e in ensembles}
    verdicts: dict[str, StepVerdicts] = {}
    diagnostics: list[Diagnostic] = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"line {line_no}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict) or "question_id" not in record:
            raise SchemaViolation(f"line {line_no}: missing question_id")
        qid = str(record["question_id"])
        rows = record.get("per_path")
        if not isinstance(rows, list) or not all(
            isinstance(r, list) and all(isinstance(v, bool) for v in r) for r in rows
        ):
            raise SchemaViolation(f"line {line_no}: per_path must be a list of bool lists")
        source = record.get("source", SOURCE_ORACLE)
        if ensembles is not None:
            if qid not in ensembles:
                diagnostics.append(
                    Diagnostic(line_no, "verdicts for unknown question, skipped", qid)
                )
                continue
            ens = ensembles[qid]
            if len(rows) != ens.n_paths or any(len(r) != ens.step_budget for r in rows):
                raise DimensionMismatch(
                    f"line {line_no}: verdicts for {qid} do not match "
                    f"N={ens.n_paths}, M={ens.step_budget}"
                )
        verdicts[qid] = StepVerdicts(
            question_id=qid,
            per_path=tuple(tuple(r) for r in rows),
            source=source,
        )
    return verdicts, diagnostics


def write_verdicts(verdicts: Iterable[StepVerdicts], stream: IO[str]) -> int:
    count = 0
    for v in verdicts:
        stream.write(
            json.dumps(
                {
                    "question_id": v.question_id,
                    "per_path": [list(row) for row in v.per_path],
                    "source": v.source,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
        count += 1
    return count


_TEMPLATES = {
    "backward-v1": (
        "You previously solved this problem step by step.\n"
        "Question: {question}\n"
        "Reasoning so far:\n{prefix}\n"
        "Step under check: {masked_step}\n"
        "The step originally concluded: {conclusion}\n"
        "Re-derive the masked quantity from the question and the reasoning "
        "so far. If the original conclusion is right, reply beginning with "
        '"correct"; otherwise reply beginning with "incorrect".'
    )
}


def build_backward_verification_prompt(req: VerificationRequest) -> str:
    """Render the deterministic backward-verification prompt for one step."""
    template = _TEMPLATES.get(req.template_id)
    if template is None:
        raise TemplateNotFound(f"unknown template {req.template_id!r}")
    target_text = req.path_steps[req.target_step - 1]
    match = None
    for match in _LAST_NUMBER_RE.finditer(target_text):
        pass
    if match is not None:
        masked = target_text[: match.start()] + "___" + target_text[match.end():]
        conclusion = match.group()
    else:
        masked = target_text
        conclusion = target_text
    prefix_steps = req.path_steps[: req.target_step - 1]
    prefix = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(prefix_steps)) or "(none)"
    return template.format(
        question=req.question,
        prefix=prefix,
        masked_step=masked,
        conclusion=conclusion,
    )


def _scan_verdict(completion: str) -> tuple[bool, bool]:
    """(verdict, ambiguous) for a completion's first sentence."""
    first = re.split(r"(?<=[.!?])\s", completion.strip(), maxsplit=1)[0]
    first = first.strip().strip('"').strip()
    lowered = first.lower()
    if re.match(r"(incorrect|no)\b", lowered):
        return False, False
    if re.match(r"(correct|yes)\b", lowered):
        return True, False
    return False, True


def parse_verdict(completion: str) -> bool:
    """True iff the completion's first sentence leads with "correct"/"yes".

    A leading "incorrect"/"no" is false; anything else is false with an
    ambiguity warning, which biases the verified-step count downward
    rather than inventing correctness.
    """
    verdict, ambiguous = _scan_verdict(completion)
    if ambiguous:
        log.warning("ambiguous verification completion %r, treating as incorrect", completion)
    return verdict


class VerdictCache:
    """In-memory verdict cache with optional JSONL persistence."""

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._store: dict[str, bool] = {}
        if self._path is not None and self._path.exists():
            with self._path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._store[record["key"]] = bool(record["verdict"])

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key: str) -> bool | None:
        return self._store.get(key)

    def put(self, key: str, verdict: bool) -> None:
        self._store[key] = verdict
        if self._path is not None:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "verdict": verdict}) + "\n")


def cache_key(
    question_id: str, path_index: int, step_index: int, template_id: str, model_id: str
) -> str:
    return json.dumps(
        [question_id, path_index, step_index, template_id, model_id],
        separators=(",", ":"),
        ensure_ascii=False,
    )


class LLMClient:
    """Small chat-completion client: retry with backoff, audit log.

    The endpoint base address comes from the CALIB_LLM_BASE environment
    variable (or the constructor); requests go to <base>/chat/completions
    with a bearer credential from CALIB_LLM_KEY when present.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        *,
        timeout: float = 30.0,
        max_attempts: int = 4,
        backoff_base: float = 0.5,
        audit_path: str | Path | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url if base_url is not None else os.environ.get(ENV_BASE)
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_KEY)
        if not self.base_url:
            raise EndpointNotConfigured(
                f"no endpoint configured; set {ENV_BASE} or pass base_url"
            )
        self.timeout = timeout
        self.max_attempts = max(1, max_attempts)
        self.backoff_base = backoff_base
        self.audit_path = Path(audit_path) if audit_path is not None else None
        self.session = session or requests.Session()

    @property
    def endpoint(self) -> str:
        return self.base_url.rstrip("/") + "/chat/completions"

    def complete(
        self,
        prompt: str,
        params: DecodingParams | None = None,
        *,
        cache_key: str | None = None,
    ) -> CompletionEnvelope:
        """POST the prompt; returns the first choice's message content."""
        params = params or DecodingParams()
        body = {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        start = time.monotonic()
        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self.session.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                log.debug("attempt %d transport failure: %s", attempt, exc)
            else:
                if response.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credential ({response.status_code})")
                if response.status_code == 200:
                    completion = self._extract_content(response)
                    latency = time.monotonic() - start
                    self._audit(cache_key, prompt, completion, latency)
                    return CompletionEnvelope(
                        prompt=prompt,
                        completion=completion,
                        model_id=params.model,
                        latency=latency,
                    )
                last_error = TransportError(f"status {response.status_code}")
                rate_limited = response.status_code == 429
                if response.status_code not in _RETRYABLE_STATUS:
                    raise TransportError(
                        f"endpoint answered status {response.status_code}"
                    )
            if attempt < self.max_attempts:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))

        if rate_limited:
            raise RateLimited(f"still rate-limited after {self.max_attempts} attempts")
        raise TransportError(
            f"endpoint unreachable after {self.max_attempts} attempts: {last_error}"
        )

    @staticmethod
    def _extract_content(response: requests.Response) -> str:
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise MalformedResponse(f"unusable completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponse("completion content is not text")
        return content

    def _audit(self, key: str | None, prompt: str, completion: str, latency: float) -> None:
        if self.audit_path is None:
            return
        record = {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="milliseconds"),
            "cache_key": key,
            "prompt_hash": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
            "completion": completion,
            "latency_ms": round(latency * 1000.0, 3),
        }
        with self.audit_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def llm_complete(
    prompt: str,
    params: DecodingParams | None = None,
    client: LLMClient | None = None,
) -> CompletionEnvelope:
    """Module-level convenience over LLMClient.complete."""
    client = client or LLMClient()
    return client.complete(prompt, params)


@dataclass
class LLMVerifier:
    """Drives backward verification of every real step through an endpoint."""

    client: LLMClient
    model_id: str = "default"
    template_id: str = DEFAULT_TEMPLATE_ID
    cache: VerdictCache = field(default_factory=VerdictCache)
    max_workers: int = 4
    temperature: float = 0.0  # verdicts must be reproducible
    max_tokens: int = 16
    diagnostics: list[str] = field(default_factory=list)

    def verdicts_for(self, ensemble: PathEnsemble) -> StepVerdicts:
        budget = ensemble.step_budget
        rows: list[list[bool]] = [[False] * budget for _ in ensemble.paths]
        tasks: list[tuple[int, int, str]] = []  # (path_idx, step_idx0, key)
        prompts: dict[str, str] = {}

        for p_idx, path in enumerate(ensemble.paths):
            real_texts = tuple(s.text for s in path.steps if not s.is_pad)
            for s_idx0 in range(len(real_texts)):
                key = cache_key(
                    ensemble.question_id, p_idx, s_idx0 + 1, self.template_id, self.model_id
                )
                cached = self.cache.get(key)
                if cached is not None:
                    rows[p_idx][s_idx0] = cached
                    continue
                if key not in prompts:
                    req = VerificationRequest(
                        question=ensemble.question,
                        path_steps=real_texts,
                        target_step=s_idx0 + 1,
                        template_id=self.template_id,
                    )
                    prompts[key] = build_backward_verification_prompt(req)
                tasks.append((p_idx, s_idx0, key))

        if tasks:
            unique_keys = list(dict.fromkeys(key for _, _, key in tasks))
            results = self._complete_many(unique_keys, prompts)
            for p_idx, s_idx0, key in tasks:
                rows[p_idx][s_idx0] = results[key]
                self.cache.put(key, results[key])

        return StepVerdicts(
            question_id=ensemble.question_id,
            per_path=tuple(tuple(row) for row in rows),
            source=SOURCE_LLM,
        )

    def _complete_many(self, keys: list[str], prompts: dict[str, str]) -> dict[str, bool]:
        params = DecodingParams(
            model=self.model_id, temperature=self.temperature, max_tokens=self.max_tokens
        )

        def judge(key: str) -> bool:
            try:
                envelope = self.client.complete(prompts[key], params, cache_key=key)
            except TransportError as exc:
                self.diagnostics.append(f"{key}: transport failure, verdict false ({exc})")
                return False
            verdict, ambiguous = _scan_verdict(envelope.completion)
            if ambiguous:
                self.diagnostics.append(f"{key}: ambiguous completion, verdict false")
            return verdict

        if self.max_workers <= 1 or len(keys) == 1:
            return {key: judge(key) for key in keys}
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = {key: pool.submit(judge, key) for key in keys}
            return {key: fut.result() for key, fut in futures.items()}


def verify_ensemble(
    ensemble: PathEnsemble,
    source: Mapping[str, StepVerdicts] | LLMVerifier,
) -> StepVerdicts:
    """Produce verdicts for one ensemble from an oracle table or a verifier.

    Oracle tables pass through except at pad positions, which are forced
    false (with a log warning when the table disagreed). Endpoint verdicts
    are produced per real step and cached.
    """
    if isinstance(source, LLMVerifier):
        return source.verdicts_for(ensemble)

    table = source.get(ensemble.question_id)
    if table is None:
        raise OracleMissing(f"no oracle verdicts for question {ensemble.question_id}")
    if len(table.per_path) != ensemble.n_paths or any(
        len(row) != ensemble.step_budget for row in table.per_path
    ):
        raise DimensionMismatch(
            f"oracle verdicts for {ensemble.question_id} do not match "
            f"N={ensemble.n_paths}, M={ensemble.step_budget}"
        )
    rows = []
    for path, row in zip(ensemble.paths, table.per_path):
        masked = list(row)
        for i, step in enumerate(path.steps):
            if step.is_pad and masked[i]:
                log.warning(
                    "question %s: oracle claimed a pad step correct, forcing false",
                    ensemble.question_id,
                )
                masked[i] = False
        rows.append(tuple(masked))
    return StepVerdicts(
        question_id=ensemble.question_id, per_path=tuple(rows), source=table.source
    )
