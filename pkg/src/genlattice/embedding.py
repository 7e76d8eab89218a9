"""Context-aware token embeddings and the token similarity score used for merging.

Two providers: a remote HTTP embedding service (JSON contract
``{model, inputs} -> {vectors}``) and a fully offline fallback that hashes
character trigrams into 64 dimensions. Everything downstream (similarity,
merging) only assumes deterministic ``embed_batch``.

The similarity score for two token positions is the cosine of their
context-window embeddings minus a positional penalty of |idxA - idxB| / 20.
When both tokens are stopwords, the cosine is taken over their neighbors
instead (mean of previous-neighbor and next-neighbor cosines); a missing
neighbor at a sequence boundary falls back to the bare-token cosine of the
two stopwords themselves.
"""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Protocol

import numpy as np
import requests

from .segmentation import TokenSequence

DEFAULT_REMOTE_MODEL = "Xenova/all-MiniLM-L6-v2"
DEFAULT_WINDOW = 2
POSITION_PENALTY_SCALE = 20.0


class ContractViolation(ValueError):
    """Mixed providers, mismatched dimensions, or a zero-norm vector."""


class ProviderError(RuntimeError):
    """Embedding provider failure, with retry metadata for callers."""

    def __init__(self, message: str, *, retryable: bool, attempts: int = 1):
        super().__init__(message)
        self.retryable = retryable
        self.attempts = attempts


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    provider_tag: str

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class EmbeddingProvider(Protocol):
    name: str
    dimension: int

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]: ...


class HashedTrigramEmbedder:
    """Offline fallback: character-trigram bag hashed into a fixed space.

    Bit-identical for the same input across runs and platforms (keyed
    blake2b, no process-salted hashing). Vectors are L2-normalized and
    non-zero for any input.
    """

    def __init__(self, dimension: int = 64, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self.name = f"hashed-trigram/{dimension}/{seed}"
        self._key = seed.to_bytes(8, "big")

    def _bucket(self, gram: str) -> tuple[int, float]:
        h = int.from_bytes(
            hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=self._key).digest(),
            "big",
        )
        sign = 1.0 if (h >> 8) & 1 else -1.0
        return h % self.dimension, sign

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        grams = [text[k : k + 3] for k in range(len(text) - 2)] if len(text) >= 3 else [text]
        for gram in grams:
            idx, sign = self._bucket(gram)
            vec[idx] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # opposite-sign collisions (or empty text) cancelled everything
            idx, _ = self._bucket(text)
            vec[idx] = 1.0
            norm = 1.0
        return vec / norm

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed_one(t) for t in texts]


class RemoteEmbedder:
    """Client for an HTTP embedding service: POST {model, inputs} -> {vectors}."""

    def __init__(self, endpoint: str, model: str = DEFAULT_REMOTE_MODEL, *,
                 timeout: float = 30.0, max_attempts: int = 3,
                 backoff_start: float = 0.5, sleep=time.sleep):
        self.endpoint = endpoint
        self.model = model
        self.name = f"remote/{model}"
        self.dimension = -1  # learned from the first response
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self._sleep = sleep

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            return []
        payload = {"model": self.model, "inputs": list(texts)}
        last_exc: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_start * 2 ** (attempt - 1))
                continue
            if 400 <= resp.status_code < 500:
                raise ProviderError(
                    f"embedding endpoint rejected request: {resp.status_code}",
                    retryable=False, attempts=attempt,
                )
            if resp.status_code >= 500:
                last_exc = ProviderError(
                    f"embedding endpoint error: {resp.status_code}",
                    retryable=True, attempts=attempt,
                )
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_start * 2 ** (attempt - 1))
                continue
            vectors = resp.json()["vectors"]
            if len(vectors) != len(texts):
                raise ProviderError(
                    f"expected {len(texts)} vectors, got {len(vectors)}",
                    retryable=False, attempts=attempt,
                )
            out = [np.asarray(v, dtype=np.float64) for v in vectors]
            if self.dimension < 0:
                self.dimension = out[0].shape[0]
            return out
        raise ProviderError(
            f"embedding endpoint unreachable after {self.max_attempts} attempts: {last_exc}",
            retryable=True, attempts=self.max_attempts,
        )


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; rejects mixed providers and zero vectors."""
    if a.provider_tag != b.provider_tag:
        raise ContractViolation(
            f"provider mismatch: {a.provider_tag!r} vs {b.provider_tag!r}")
    if a.dimension != b.dimension:
        raise ContractViolation(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        raise ContractViolation("cosine of a zero vector is undefined")
    value = float(np.dot(a.values, b.values)) / (na * nb)
    return max(-1.0, min(1.0, value))


_TRIM_EDGES = re.compile(r"^\W+|\W+$", re.UNICODE)


def _load_stopwords() -> frozenset[str]:
    text = resources.files("genlattice.data").joinpath("stopwords.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


STOPWORDS = _load_stopwords()


def is_stopword(surface: str) -> bool:
    """Membership after trimming edge punctuation and case-folding."""
    return _TRIM_EDGES.sub("", surface).casefold() in STOPWORDS


class ContextEmbedder:
    """Embeds tokens together with their neighbors, caching by context string.

    The context of token i is the space-joined surfaces of tokens
    i-window .. i+window, truncated at sequence boundaries.
    """

    def __init__(self, provider: EmbeddingProvider, window: int = DEFAULT_WINDOW):
        self.provider = provider
        self.window = window
        self._cache: dict[str, np.ndarray] = {}

    @staticmethod
    def context_string(seq: TokenSequence, index: int, window: int) -> str:
        lo = max(0, index - window)
        return " ".join(t.surface for t in seq.tokens[lo : index + window + 1])

    def values(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = self.provider.embed_batch([text])[0]
            self._cache[text] = vec
        return vec

    def warm(self, texts: Iterable[str]) -> None:
        missing = sorted({t for t in texts if t not in self._cache})
        if missing:
            for text, vec in zip(missing, self.provider.embed_batch(missing)):
                self._cache[text] = vec

    def embed_text(self, text: str) -> EmbeddingVector:
        return EmbeddingVector(self.values(text), self.provider.name)

    def embed_in_context(self, seq: TokenSequence, index: int,
                         window: int | None = None) -> EmbeddingVector:
        if not 0 <= index < len(seq):
            raise IndexError(f"token index {index} out of range")
        w = self.window if window is None else window
        return self.embed_text(self.context_string(seq, index, w))


def token_similarity(a: tuple[TokenSequence, int], b: tuple[TokenSequence, int],
                     embedder: ContextEmbedder, window: int | None = None) -> float:
    """Similarity of two token positions: branch on stopwords, subtract penalty.

    Symmetric, and always <= 1 - |idxA - idxB| / 20.
    """
    seq_a, i = a
    seq_b, j = b
    w = embedder.window if window is None else window
    tok_a = seq_a.tokens[i]
    tok_b = seq_b.tokens[j]

    if is_stopword(tok_a.surface) and is_stopword(tok_b.surface):
        bare = None
        if i > 0 and j > 0:
            sim_prev = cosine(embedder.embed_in_context(seq_a, i - 1, w),
                              embedder.embed_in_context(seq_b, j - 1, w))
        else:
            bare = cosine(embedder.embed_text(tok_a.surface),
                          embedder.embed_text(tok_b.surface))
            sim_prev = bare
        if i < len(seq_a) - 1 and j < len(seq_b) - 1:
            sim_next = cosine(embedder.embed_in_context(seq_a, i + 1, w),
                              embedder.embed_in_context(seq_b, j + 1, w))
        else:
            if bare is None:
                bare = cosine(embedder.embed_text(tok_a.surface),
                              embedder.embed_text(tok_b.surface))
            sim_next = bare
        score = (sim_prev + sim_next) / 2.0
    else:
        score = cosine(embedder.embed_in_context(seq_a, i, w),
                       embedder.embed_in_context(seq_b, j, w))

    return score - abs(i - j) / POSITION_PENALTY_SCALE
