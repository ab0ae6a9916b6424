"""Answer normalization, final-answer extraction, and step segmentation.

Majority voting over reasoning paths only works if equal answers compare
equal as strings, so every raw answer is folded into a canonical form
first. Three answer kinds are supported:

* ``numeric``  - canonical decimal: optional leading "-", digits, optional
  "." followed by digits with no trailing zeros, and no leading zeros
  except a single "0" before the point ("1200", "0.5", "-3.25", "0").
* ``choice``   - exactly one lowercase ASCII letter ("b").
* ``freeform`` - lowercased, whitespace-collapsed, trailing sentence
  punctuation stripped.

Normalization is idempotent, and equality between normalized answers is
exact string equality on (kind, canonical), which makes answer grouping a
true partition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnparseableAnswer

NUMERIC = "numeric"
CHOICE = "choice"
FREEFORM = "freeform"
ANSWER_KINDS = (NUMERIC, CHOICE, FREEFORM)

# Decimal token inside arbitrary text. Commas are handled by a pre-pass.
_DECIMAL_RE = re.compile(r"-?\d+(?:\.\d+)?|-?\.\d+")
_CANONICAL_NUMERIC_RE = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d*[1-9])?$")
_CURRENCY_CHARS = "$€£¥"

_ANSWER_CUE_RE = re.compile(r"the\s+answer\s+is", re.IGNORECASE)
# A letter that is not part of a longer word.
_LONE_LETTER_RE = re.compile(r"(?<![A-Za-z])([A-Za-z])(?![A-Za-z])")
# Option letters in fallback position: "(b)", "[C]", "b)", or a lone capital.
_OPTION_LETTER_RE = re.compile(
    r"[([]\s*([A-Za-z])\s*[)\]]|(?<![A-Za-z])([A-Za-z])\)|(?<![A-Za-z])([A-Z])(?![A-Za-z])"
)

_STEP_MARKER_RE = re.compile(r"\bstep\s+\d+\s*:", re.IGNORECASE)
_NUMBERED_LINE_RE = re.compile(r"^\s*\(?(\d+)[.):]\s+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class NormalizedAnswer:
    """A canonical answer value; equality is exact on (kind, canonical)."""

    kind: str
    canonical: str

    def __post_init__(self) -> None:
        if self.kind not in ANSWER_KINDS:
            raise UnparseableAnswer(f"unknown answer kind {self.kind!r}")
        if self.kind == NUMERIC and (
            not _CANONICAL_NUMERIC_RE.fullmatch(self.canonical) or self.canonical == "-0"
        ):
            raise UnparseableAnswer(f"not a canonical decimal: {self.canonical!r}")
        if self.kind == CHOICE and not re.fullmatch(r"[a-z]", self.canonical):
            raise UnparseableAnswer(f"not a canonical choice letter: {self.canonical!r}")

    def __str__(self) -> str:
        return f"{self.kind}:{self.canonical}"


def _canonical_decimal(token: str) -> str:
    """Rewrite a decimal token into the canonical grammar."""
    negative = token.startswith("-")
    token = token.lstrip("-")
    if "." in token:
        integer, fraction = token.split(".", 1)
    else:
        integer, fraction = token, ""
    integer = integer.lstrip("0") or "0"
    fraction = fraction.rstrip("0")
    out = integer + ("." + fraction if fraction else "")
    if negative and out != "0":
        out = "-" + out
    return out


def normalize_answer(raw: str, kind: str) -> NormalizedAnswer:
    """Fold a raw answer string into its canonical form.

    Raises UnparseableAnswer when the raw string is blank, when a numeric
    answer holds no decimal token, or when a choice answer does not reduce
    to a single letter.
    """
    if kind not in ANSWER_KINDS:
        raise UnparseableAnswer(f"unknown answer kind {kind!r}")
    text = raw.strip()
    if not text:
        raise UnparseableAnswer("empty answer string")

    if kind == NUMERIC:
        cleaned = text.translate({ord(c): None for c in _CURRENCY_CHARS + ","})
        match = _DECIMAL_RE.search(cleaned)
        if match is None:
            raise UnparseableAnswer(f"no decimal token in {raw!r}")
        return NormalizedAnswer(NUMERIC, _canonical_decimal(match.group()))

    if kind == CHOICE:
        letters = re.findall(r"[A-Za-z]", text)
        if len(letters) == 1:
            return NormalizedAnswer(CHOICE, letters[0].lower())
        match = _OPTION_LETTER_RE.search(text)
        if match is not None:
            letter = next(g for g in match.groups() if g)
            return NormalizedAnswer(CHOICE, letter.lower())
        raise UnparseableAnswer(f"no single option letter in {raw!r}")

    collapsed = re.sub(r"\s+", " ", text).strip().lower()
    collapsed = collapsed.rstrip(".!?").strip()
    if not collapsed:
        raise UnparseableAnswer("empty answer after normalization")
    return NormalizedAnswer(FREEFORM, collapsed)


def extract_final_answer(rationale: str, kind: str) -> NormalizedAnswer | None:
    """Pull the final answer out of a rationale, or None when absent.

    The operand of the last "the answer is ..." cue wins (case-insensitive).
    Without a usable cue, numeric falls back to the last decimal token in
    the text and choice to the last standalone option letter; freeform has
    no fallback.
    """
    if not rationale or not rationale.strip():
        return None

    cues = list(_ANSWER_CUE_RE.finditer(rationale))
    if cues:
        operand = rationale[cues[-1].end():]
        answer = _answer_from_operand(operand, kind)
        if answer is not None:
            return answer

    if kind == NUMERIC:
        cleaned = rationale.translate({ord(c): None for c in _CURRENCY_CHARS + ","})
        tokens = _DECIMAL_RE.findall(cleaned)
        if tokens:
            return NormalizedAnswer(NUMERIC, _canonical_decimal(tokens[-1]))
    elif kind == CHOICE:
        matches = list(_OPTION_LETTER_RE.finditer(rationale))
        if matches:
            letter = next(g for g in matches[-1].groups() if g)
            return NormalizedAnswer(CHOICE, letter.lower())
    return None


def _answer_from_operand(operand: str, kind: str) -> NormalizedAnswer | None:
    operand = operand.lstrip(" :\t")
    if kind == NUMERIC:
        cleaned = operand.translate({ord(c): None for c in _CURRENCY_CHARS + ","})
        match = _DECIMAL_RE.search(cleaned)
        if match is None:
            return None
        return NormalizedAnswer(NUMERIC, _canonical_decimal(match.group()))
    if kind == CHOICE:
        match = _LONE_LETTER_RE.search(operand)
        if match is None:
            return None
        return NormalizedAnswer(CHOICE, match.group(1).lower())
    # freeform: take the remainder of the sentence holding the cue
    fragment = re.split(r"[.!?\n]", operand, maxsplit=1)[0]
    fragment = fragment.strip()
    if not fragment:
        return None
    return normalize_answer(fragment, FREEFORM)


def segment_steps(rationale: str) -> list[str]:
    """Split a rationale into step texts.

    Explicit "Step k:" markers win; numbered lines ("1.", "2)", "(3)") come
    next; otherwise the text is split at sentence boundaries. Non-blank
    input yields at least one segment; blank input yields none.
    """
    text = rationale.strip()
    if not text:
        return []

    markers = list(_STEP_MARKER_RE.finditer(text))
    if markers:
        segments = []
        for i, marker in enumerate(markers):
            end = markers[i + 1].start() if i + 1 < len(markers) else len(text)
            segment = text[marker.end():end].strip()
            if segment:
                segments.append(segment)
        # Text before the first marker is preamble, kept only if it is all there is.
        if segments:
            return segments

    lines = text.splitlines()
    numbered = [bool(_NUMBERED_LINE_RE.match(line)) for line in lines]
    if sum(numbered) >= 2:
        segments = []
        current: list[str] = []
        for line, is_start in zip(lines, numbered):
            if is_start:
                if current:
                    segments.append(" ".join(current).strip())
                current = [_NUMBERED_LINE_RE.sub("", line, count=1).strip()]
            elif current:
                current.append(line.strip())
            elif line.strip():
                current = [line.strip()]
        if current:
            segments.append(" ".join(current).strip())
        segments = [s for s in segments if s]
        if segments:
            return segments

    sentences = [s for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]
    return sentences if sentences else [text]
