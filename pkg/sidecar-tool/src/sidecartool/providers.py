"""Model providers: sentence embeddings, contradiction scoring, token logprobs.

A provider is picked by its model identifier. Identifiers under the
``lexical:`` scheme are self-contained deterministic scorers that need no
downloads and exist so the exporter (and its tests) can run on a machine
with no model hub access:

    lexical:ngram[-DIM]   hashed character/word n-gram embedder
    lexical:negation      negation-cue contradiction scorer
    lexical:charlm        letter-frequency language model

Any other identifier is treated as a hub model and resolved through
sentence-transformers / transformers; those imports happen lazily so the
lexical path never touches them. Construction failures of any kind
surface as ModelLoadError.

All embedders return unit-norm float vectors of a fixed dimension.
Contradiction scorers return probabilities in [0, 1] oriented as
matrix[hypothesis_index][premise_index]. Language models return one
natural-log probability per scored token, every entry <= 0.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import ModelLoadError

LEXICAL_SCHEME = "lexical:"
DEFAULT_NGRAM_DIM = 256

_WORD_RE = re.compile(r"[a-z0-9']+")
_TOKEN_RE = re.compile(r"\S+")

NEGATION_CUES = frozenset({
    "not", "no", "never", "none", "nothing", "nobody", "neither", "nor",
    "cannot", "can't", "won't", "don't", "doesn't", "didn't", "isn't",
    "aren't", "wasn't", "weren't", "couldn't", "shouldn't", "wouldn't",
    "without",
})


class Embedder(Protocol):
    model_id: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class ContradictionScorer(Protocol):
    model_id: str

    def matrix(self, premises: Sequence[str], hypotheses: Sequence[str]) -> np.ndarray: ...


class TokenScorer(Protocol):
    model_id: str

    def token_logprobs(self, text: str) -> np.ndarray: ...


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


# ---------------------------------------------------------------------------
# lexical providers


@dataclass
class NgramEmbedder:
    """Signed feature hashing over word unigrams and character trigrams.

    A pure function of the text: identical inputs give identical vectors,
    shared vocabulary raises cosine, and no state survives between calls.
    """

    dimension: int = DEFAULT_NGRAM_DIM
    model_id: str = ""

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ModelLoadError(f"embedding dimension must be >= 2, got {self.dimension}")
        if not self.model_id:
            self.model_id = f"lexical:ngram-{self.dimension}"

    def _features(self, text: str) -> list[str]:
        words = _words(text)
        feats = [f"w:{w}" for w in words]
        basis = " ".join(words) if words else text.strip()
        padded = f" {basis} "
        feats.extend(f"c:{padded[i:i + 3]}" for i in range(len(padded) - 2))
        return feats

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ValueError("embed needs at least one text")
        out = np.zeros((len(texts), self.dimension), dtype=float)
        for row, text in enumerate(texts):
            if not text.strip():
                raise ValueError(f"text {row} is blank")
            for feat in self._features(text):
                digest = hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dimension
                sign = 1.0 if digest[4] & 1 else -1.0
                out[row, bucket] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm < 1e-12:
                # opposite-signed features cancelled; fall back to one hot
                whole = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
                out[row] = 0.0
                out[row, int.from_bytes(whole[:4], "big") % self.dimension] = 1.0
            else:
                out[row] /= norm
        return out


@dataclass
class NegationCueScorer:
    """Contradiction probability from negation parity and word overlap.

    Two statements about the same things, one of them negated, score
    high; everything else scores low. Crude, but directionally right,
    bounded and deterministic.
    """

    model_id: str = "lexical:negation"

    def _profile(self, text: str) -> tuple[int, frozenset[str]]:
        tokens = _words(text)
        parity = sum(1 for t in tokens if t in NEGATION_CUES) % 2
        content = frozenset(t for t in tokens if t not in NEGATION_CUES)
        return parity, content

    def score(self, premise: str, hypothesis: str) -> float:
        p_parity, p_content = self._profile(premise)
        h_parity, h_content = self._profile(hypothesis)
        union = p_content | h_content
        overlap = len(p_content & h_content) / len(union) if union else 0.0
        if p_parity != h_parity:
            return 0.1 + 0.85 * overlap
        return 0.05 + 0.15 * (1.0 - overlap)

    def matrix(self, premises: Sequence[str], hypotheses: Sequence[str]) -> np.ndarray:
        if not premises or not hypotheses:
            raise ValueError("contradiction matrix needs non-empty premises and hypotheses")
        return np.array(
            [[self.score(p, h) for p in premises] for h in hypotheses], dtype=float
        )


# relative frequencies of English letters; anything else shares _OTHER_MASS
_LETTER_WEIGHTS = {
    "e": 12.70, "t": 9.06, "a": 8.17, "o": 7.51, "i": 6.97, "n": 6.75,
    "s": 6.33, "h": 6.09, "r": 5.99, "d": 4.25, "l": 4.03, "c": 2.78,
    "u": 2.76, "m": 2.41, "w": 2.36, "f": 2.23, "g": 2.02, "y": 1.97,
    "p": 1.93, "b": 1.49, "v": 0.98, "k": 0.77, "j": 0.15, "x": 0.15,
    "q": 0.10, "z": 0.07,
}
_OTHER_MASS = 2.0


@dataclass
class CharFrequencyScorer:
    """Unigram character model with fixed English letter frequencies.

    A token's log-probability is the sum of its characters' log
    frequencies, so common-letter words score higher than keyboard
    mashing and every value is strictly negative.
    """

    model_id: str = "lexical:charlm"
    _logp: dict[str, float] = field(init=False, repr=False)
    _logp_other: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        total = sum(_LETTER_WEIGHTS.values()) + _OTHER_MASS
        self._logp = {c: math.log(w / total) for c, w in _LETTER_WEIGHTS.items()}
        self._logp_other = math.log(_OTHER_MASS / total)

    def token_logprobs(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text)
        if not tokens:
            raise ValueError("text has no tokens")
        return np.array(
            [
                sum(self._logp.get(c, self._logp_other) for c in token.lower())
                for token in tokens
            ],
            dtype=float,
        )


# ---------------------------------------------------------------------------
# hub-model providers (lazy imports; anything failing becomes ModelLoadError)


class TransformerEmbedder:
    def __init__(self, model_id: str, batch_size: int = 32):
        self.model_id = model_id
        self.batch_size = batch_size
        try:
            from sentence_transformers import SentenceTransformer

            self._model = SentenceTransformer(model_id)
            self.dimension = int(self._model.get_sentence_embedding_dimension())
        except Exception as exc:
            raise ModelLoadError(f"cannot load embedding model {model_id!r}: {exc}") from exc

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(
            list(texts),
            batch_size=self.batch_size,
            convert_to_numpy=True,
            normalize_embeddings=True,
            show_progress_bar=False,
        )
        vectors = np.asarray(vectors, dtype=float)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        return vectors / np.where(norms == 0.0, 1.0, norms)


class TransformerNliScorer:
    def __init__(self, model_id: str, batch_size: int = 32):
        self.model_id = model_id
        self.batch_size = batch_size
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer

            self._torch = torch
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModelForSequenceClassification.from_pretrained(model_id)
            self._model.eval()
        except Exception as exc:
            raise ModelLoadError(f"cannot load NLI model {model_id!r}: {exc}") from exc
        self._contradiction_index = None
        for label, index in self._model.config.label2id.items():
            if "contradiction" in label.lower():
                self._contradiction_index = int(index)
        if self._contradiction_index is None:
            raise ModelLoadError(
                f"NLI model {model_id!r} exposes no contradiction label: "
                f"{sorted(self._model.config.label2id)}"
            )

    def matrix(self, premises: Sequence[str], hypotheses: Sequence[str]) -> np.ndarray:
        if not premises or not hypotheses:
            raise ValueError("contradiction matrix needs non-empty premises and hypotheses")
        pairs = [(p, h) for h in hypotheses for p in premises]
        probs: list[float] = []
        with self._torch.no_grad():
            for start in range(0, len(pairs), self.batch_size):
                chunk = pairs[start:start + self.batch_size]
                encoded = self._tokenizer(
                    [p for p, _ in chunk],
                    [h for _, h in chunk],
                    padding=True,
                    truncation=True,
                    return_tensors="pt",
                )
                logits = self._model(**encoded).logits
                soft = self._torch.softmax(logits, dim=-1)
                probs.extend(soft[:, self._contradiction_index].tolist())
        return np.array(probs, dtype=float).reshape(len(hypotheses), len(premises))


class TransformerLmScorer:
    def __init__(self, model_id: str):
        self.model_id = model_id
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer

            self._torch = torch
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModelForCausalLM.from_pretrained(model_id)
            self._model.eval()
        except Exception as exc:
            raise ModelLoadError(f"cannot load language model {model_id!r}: {exc}") from exc

    def token_logprobs(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("text has no tokens")
        ids = self._tokenizer(text, return_tensors="pt").input_ids
        with self._torch.no_grad():
            logits = self._model(ids).logits
        # the first token has no prefix to condition on, so it goes unscored
        log_probs = self._torch.log_softmax(logits[0, :-1], dim=-1)
        picked = log_probs.gather(1, ids[0, 1:].unsqueeze(1)).squeeze(1)
        return np.minimum(picked.numpy().astype(float), 0.0)


# ---------------------------------------------------------------------------
# resolution


def _lexical_name(model_id: str) -> str | None:
    if model_id.startswith(LEXICAL_SCHEME):
        return model_id[len(LEXICAL_SCHEME):]
    return None


def resolve_embedder(model_id: str, batch_size: int = 32) -> Embedder:
    name = _lexical_name(model_id)
    if name is None:
        return TransformerEmbedder(model_id, batch_size)
    if name == "ngram":
        return NgramEmbedder()
    if name.startswith("ngram-"):
        try:
            return NgramEmbedder(dimension=int(name.split("-", 1)[1]))
        except ValueError as exc:
            raise ModelLoadError(f"bad lexical embedder id {model_id!r}: {exc}") from exc
    raise ModelLoadError(f"unknown lexical embedder {model_id!r}")


def resolve_contradiction_scorer(model_id: str, batch_size: int = 32) -> ContradictionScorer:
    name = _lexical_name(model_id)
    if name is None:
        return TransformerNliScorer(model_id, batch_size)
    if name == "negation":
        return NegationCueScorer()
    raise ModelLoadError(f"unknown lexical contradiction scorer {model_id!r}")


def resolve_token_scorer(model_id: str) -> TokenScorer:
    name = _lexical_name(model_id)
    if name is None:
        return TransformerLmScorer(model_id)
    if name == "charlm":
        return CharFrequencyScorer()
    raise ModelLoadError(f"unknown lexical language model {model_id!r}")
