"""Sample completions from a chat-completion endpoint, with a file cache.

Requests are content-addressed: the digest of (prompt, model, temperature,
n, seed, endpoint) keys both the cache file and the generation ids, so a
repeated request replays from disk with zero network calls and identical
ids. The wire contract is the OpenAI-compatible chat-completions shape.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .segmentation import RawGeneration

API_KEY_ENV = "GENLATTICE_API_KEY"


class SamplingError(RuntimeError):
    pass


class ConfigurationError(SamplingError):
    """Bad request or missing configuration; retrying cannot help."""


class TransportError(SamplingError):
    """Endpoint unreachable or persistently failing."""


class PartialResultError(SamplingError):
    """Provider returned fewer completions than requested."""

    def __init__(self, message: str, completed: list[RawGeneration]):
        super().__init__(message)
        self.completed = completed


class CorpusFormatError(ValueError):
    """Malformed corpus record; message carries the file and line number."""


@dataclass(frozen=True)
class GenerationRequest:
    prompt_text: str
    model_id: str
    temperature: float = 0.7
    n: int = 20
    client_seed: int | None = None
    endpoint: str = ""

    def cache_key(self) -> str:
        payload = json.dumps(
            {
                "prompt_text": self.prompt_text,
                "model_id": self.model_id,
                "temperature": self.temperature,
                "n": self.n,
                "client_seed": self.client_seed,
                "endpoint": self.endpoint,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class SamplerClient:
    """Samples n completions per request; caches full batches on disk."""

    def __init__(self, cache_dir: str | Path, *, api_key: str | None = None,
                 timeout: float = 60.0, max_attempts: int = 3,
                 backoff_start: float = 0.5, sleep=time.sleep,
                 post=None):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self._sleep = sleep
        self._post = post
        self.provider_calls = 0
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _key_lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = threading.Lock()
                self._locks[key] = lock
            return lock

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def sample(self, req: GenerationRequest,
               prompt_id: str = "prompt-0") -> list[RawGeneration]:
        if req.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not req.endpoint:
            raise ConfigurationError("no provider endpoint configured")
        key = req.cache_key()
        with self._key_lock(key):
            cached = self._read_cache(key)
            if cached is None:
                texts = self._fetch(req)
                self._write_cache(key, req, texts)
            else:
                texts = cached
        return self._materialize(req, key, texts, prompt_id)

    def _materialize(self, req: GenerationRequest, key: str, texts: list[str],
                     prompt_id: str) -> list[RawGeneration]:
        short = key[:16]
        return [
            RawGeneration(
                id=f"{short}:{i}",
                prompt_id=prompt_id,
                text=text,
                model_id=req.model_id,
                temperature=req.temperature,
                sample_index=i,
            )
            for i, text in enumerate(texts)
        ]

    def _read_cache(self, key: str) -> list[str] | None:
        path = self._cache_path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))["texts"]

    def _write_cache(self, key: str, req: GenerationRequest,
                     texts: list[str]) -> None:
        record = {
            "request": {
                "prompt_text": req.prompt_text,
                "model_id": req.model_id,
                "temperature": req.temperature,
                "n": req.n,
                "client_seed": req.client_seed,
                "endpoint": req.endpoint,
            },
            "texts": texts,
        }
        tmp = self._cache_path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(record, indent=2), "utf-8")
        tmp.replace(self._cache_path(key))

    def _fetch(self, req: GenerationRequest) -> list[str]:
        body = {
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt_text}],
            "temperature": req.temperature,
            "n": req.n,
        }
        if req.client_seed is not None:
            body["seed"] = req.client_seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        post = self._post or requests.post
        last_error: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            self.provider_calls += 1
            try:
                resp = post(req.endpoint, json=body, headers=headers,
                            timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_start * 2 ** (attempt - 1))
                continue
            if 400 <= resp.status_code < 500:
                raise ConfigurationError(
                    f"provider rejected request ({resp.status_code}): {resp.text[:200]}")
            if resp.status_code >= 500:
                last_error = TransportError(f"provider error {resp.status_code}")
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_start * 2 ** (attempt - 1))
                continue
            data = resp.json()
            texts = [c["message"]["content"] for c in data.get("choices", [])]
            if len(texts) < req.n:
                raise PartialResultError(
                    f"provider returned {len(texts)} of {req.n} completions",
                    self._materialize(req, req.cache_key(), texts, "prompt-0"),
                )
            return texts[: req.n]
        raise TransportError(
            f"provider unreachable after {self.max_attempts} attempts: {last_error}")


def import_corpus(path: str | Path, prompt_id: str = "prompt-0") -> list[RawGeneration]:
    """Load completions from JSON-lines ({'text': ...} records) or plain text
    (one completion per line). Ids derive from the file digest + line number."""
    path = Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()[:16]
    text = raw.decode("utf-8")
    is_jsonl = path.suffix.lower() in {".jsonl", ".ndjson", ".json"}

    generations: list[RawGeneration] = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline is a line terminator, not a record
    for lineno, line in enumerate(lines):
        if is_jsonl:
            if line.strip() == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    f"{path}:{lineno + 1}: invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict) or "text" not in record:
                raise CorpusFormatError(
                    f"{path}:{lineno + 1}: record must be an object with a 'text' field")
            body = record["text"]
            if not isinstance(body, str):
                raise CorpusFormatError(f"{path}:{lineno + 1}: 'text' must be a string")
            pid = record.get("prompt_id", prompt_id)
            meta = record.get("meta", {})
        else:
            body = line
            pid = prompt_id
            meta = {}
        generations.append(RawGeneration(
            id=f"{digest}:{lineno}",
            prompt_id=pid,
            text=body,
            model_id=str(meta.get("model_id", "")) if isinstance(meta, dict) else "",
            temperature=float(meta.get("temperature", 0.0))
            if isinstance(meta, dict) else 0.0,
            sample_index=lineno,
        ))
    return generations
