"""Chat completions and per-token embeddings from external model servers.

Supports three interchangeable sources:
  - live HTTP servers speaking the de facto chat-completions schema, plus an
    embeddings endpoint that accepts ``pooling: "none"`` and returns one
    vector per token;
  - a content-addressed response cache (JSON files under a cache directory);
  - a deterministic offline stub that serves recorded responses by cache key
    and fails loudly on a miss.

The API key is read from the environment at request time and is never
written to caches, fixtures, or logs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")

VALID_ROLES = ("system", "user", "assistant")


class LlmError(Exception):
    """Base class for model-access failures."""


class TransportError(LlmError):
    """Network failure or persistent server error after retries."""


class ModelConfigError(LlmError):
    """Request rejected by the server (HTTP 4xx); retrying cannot help."""


class ProtocolError(LlmError):
    """Server answered, but the payload violates the expected shape."""


class StubMissError(LlmError):
    """Stub mode received a request with no recorded fixture."""


class EmbeddingFileError(Exception):
    """Malformed offline embedding file; message names the line."""


@dataclass(frozen=True)
class ModelConfig:
    """Connection and sampling settings for one model."""

    model_id: str
    endpoint_url: str = ""
    api_key_env: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout_ms: int = 30_000
    max_retries: int = 3
    backoff_base_ms: int = 250

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id is required")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0 or self.timeout_ms <= 0 or self.backoff_base_ms <= 0:
            raise ValueError("max_tokens, timeout_ms and backoff_base_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in VALID_ROLES:
            raise ValueError(f"invalid role '{self.role}'")
        if not self.content:
            raise ValueError("empty message content")


@dataclass(frozen=True)
class TokenEmbeddingSequence:
    """Per-token embedding vectors for one text, in model token order."""

    model_id: str
    tokens: tuple[str, ...]
    vectors: tuple[tuple[float, ...], ...]
    dim: int

    def __post_init__(self) -> None:
        if len(self.tokens) < 1:
            raise ValueError("empty token sequence")
        if len(self.tokens) != len(self.vectors):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.vectors)} vectors"
            )
        for i, vec in enumerate(self.vectors):
            if len(vec) != self.dim:
                raise ValueError(f"vector {i} has length {len(vec)}, expected dim {self.dim}")
            for x in vec:
                if not math.isfinite(x):
                    raise ValueError(f"non-finite component in vector {i}")

    @classmethod
    def from_lists(
        cls, model_id: str, tokens: Sequence[str], vectors: Sequence[Sequence[float]]
    ) -> "TokenEmbeddingSequence":
        if not vectors:
            raise ValueError("empty vector list")
        return cls(
            model_id=model_id,
            tokens=tuple(str(t) for t in tokens),
            vectors=tuple(tuple(float(x) for x in vec) for vec in vectors),
            dim=len(vectors[0]),
        )


def cache_key(kind: str, model_id: str, payload: Mapping) -> str:
    """Content hash identifying one request; any payload change yields a new key."""
    canonical = json.dumps(
        {"kind": kind, "model_id": model_id, "payload": payload},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _chat_payload(messages: Sequence[ChatMessage], config: ModelConfig) -> dict:
    return {
        "model": config.model_id,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }


def _embed_payload(text: str, config: ModelConfig) -> dict:
    return {"model": config.model_id, "input": text, "pooling": "none"}


def http_transport(url: str, payload: dict, headers: dict, timeout_s: float):
    """Default transport: POST JSON, return (status_code, parsed body)."""
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout_s)
    except requests.RequestException as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    try:
        body = response.json()
    except ValueError:
        body = None
    return response.status_code, body


Transport = Callable[[str, dict, dict, float], "tuple[int, dict | None]"]


def load_stub_fixtures(path: str | Path) -> dict[str, dict]:
    """Load a recorded-session fixture file into a key -> entry mapping."""
    path = Path(path)
    entries: dict[str, dict] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            for field in ("key", "kind", "model_id", "request", "response"):
                if field not in entry:
                    raise ProtocolError(f"{path}:{line_no}: fixture missing '{field}'")
            expected = cache_key(entry["kind"], entry["model_id"], entry["request"])
            if entry["key"] != expected:
                raise ProtocolError(
                    f"{path}:{line_no}: stale fixture, key does not match request payload"
                )
            if entry["key"] in entries:
                raise ProtocolError(f"{path}:{line_no}: duplicate fixture key {entry['key']}")
            entries[entry["key"]] = entry
    return entries


class LlmClient:
    """Cached, retrying access to chat and embedding endpoints.

    Exactly one of live mode (optionally with ``cache_dir``) and stub mode
    (``stub_fixtures``) is active.  At most ``concurrency`` requests are in
    flight at any time when driven through :meth:`map_bounded`.
    """

    def __init__(
        self,
        cache_dir: str | Path | None = None,
        stub_fixtures: Mapping[str, dict] | None = None,
        transport: Transport = http_transport,
        concurrency: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.stub_fixtures = dict(stub_fixtures) if stub_fixtures is not None else None
        self.transport = transport
        self.concurrency = concurrency
        self._sleep = sleep

    # -- cache -----------------------------------------------------------

    def _cache_path(self, key: str) -> Path:
        assert self.cache_dir is not None
        return self.cache_dir / key[:2] / f"{key}.json"

    def _cache_read(self, key: str) -> dict | None:
        if self.cache_dir is None:
            return None
        path = self._cache_path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def _cache_write(self, entry: dict) -> None:
        if self.cache_dir is None:
            return
        path = self._cache_path(entry["key"])
        path.parent.mkdir(parents=True, exist_ok=True)
        # Unique temp name so concurrent writers of the same key cannot
        # interleave; os.replace makes the publish step atomic.
        tmp = path.with_suffix(f".{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)

    def iter_cache_entries(self) -> Iterable[dict]:
        """All cached entries, sorted by key (used by the cache exporter)."""
        if self.cache_dir is None or not self.cache_dir.exists():
            return
        for path in sorted(self.cache_dir.glob("*/*.json")):
            yield json.loads(path.read_text(encoding="utf-8"))

    # -- request core ----------------------------------------------------

    def _call(self, kind: str, url_suffix: str, payload: dict, config: ModelConfig,
              refresh: bool = False) -> dict:
        key = cache_key(kind, config.model_id, payload)
        if self.stub_fixtures is not None:
            entry = self.stub_fixtures.get(key)
            if entry is None:
                raise StubMissError(
                    f"no recorded {kind} response for model '{config.model_id}' "
                    f"(key {key}); re-record fixtures or run live"
                )
            return entry["response"]

        if not refresh:
            cached = self._cache_read(key)
            if cached is not None:
                return cached["response"]

        response = self._request_with_retries(kind, url_suffix, payload, config)
        self._cache_write(
            {
                "key": key,
                "kind": kind,
                "model_id": config.model_id,
                "request": payload,
                "response": response,
            }
        )
        return response

    def _request_with_retries(
        self, kind: str, url_suffix: str, payload: dict, config: ModelConfig
    ) -> dict:
        if not config.endpoint_url:
            raise ModelConfigError(
                f"model '{config.model_id}' has no endpoint_url and no stub/cache hit"
            )
        url = config.endpoint_url.rstrip("/") + url_suffix
        headers = {"Content-Type": "application/json"}
        if config.api_key_env:
            api_key = os.environ.get(config.api_key_env, "")
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
        timeout_s = config.timeout_ms / 1000.0

        last_error: Exception | None = None
        for attempt in range(config.max_retries + 1):
            if attempt > 0:
                # Exponential backoff; delays are monotonically non-decreasing.
                self._sleep(config.backoff_base_ms / 1000.0 * 2 ** (attempt - 1))
            try:
                status, body = self.transport(url, payload, headers, timeout_s)
            except TransportError as exc:
                last_error = exc
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
                continue
            if 400 <= status < 500:
                raise ModelConfigError(f"server rejected request with HTTP {status}")
            if status != 200:
                last_error = TransportError(f"server returned HTTP {status}")
                logger.warning("HTTP %d (attempt %d)", status, attempt + 1)
                continue
            if not isinstance(body, dict):
                raise ProtocolError("response body is not a JSON object")
            return self._normalize_response(kind, body)
        raise TransportError(
            f"{kind} request failed after {config.max_retries + 1} attempt(s): {last_error}"
        )

    @staticmethod
    def _normalize_response(kind: str, body: dict) -> dict:
        if kind == "chat":
            try:
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise ProtocolError("chat response missing choices[0].message.content") from None
            if not isinstance(content, str) or not content:
                raise ProtocolError("empty completion")
            return {"content": content}
        if kind == "embed":
            try:
                data = body["data"][0]
                embedding = data["embedding"]
            except (KeyError, IndexError, TypeError):
                raise ProtocolError("embeddings response missing data[0].embedding") from None
            if not isinstance(embedding, list):
                raise ProtocolError("embeddings response: 'embedding' is not a list")
            if embedding and not isinstance(embedding[0], (list, tuple)):
                raise ProtocolError(
                    "server returned a single pooled vector: server pooling not disabled"
                )
            tokens = data.get("tokens")
            if not isinstance(tokens, list) or not tokens:
                raise ProtocolError("embeddings response missing per-token 'tokens' list")
            return {"tokens": tokens, "vectors": embedding}
        raise ValueError(f"unknown request kind '{kind}'")

    # -- public operations -------------------------------------------------

    def chat(
        self, messages: Sequence[ChatMessage], config: ModelConfig, refresh: bool = False
    ) -> str:
        """Return the assistant completion for a message list.

        ``refresh`` bypasses the response cache (used for retry-on-parse-failure);
        in stub mode it has no effect, the recorded response is served again.
        """
        if not messages:
            raise ValueError("empty message list")
        response = self._call("chat", "/chat/completions", _chat_payload(messages, config),
                              config, refresh=refresh)
        content = response.get("content")
        if not isinstance(content, str) or not content:
            raise ProtocolError("empty completion")
        return content

    def embed_tokens(self, text: str, config: ModelConfig) -> TokenEmbeddingSequence:
        """Return one un-pooled vector per model token, in token order."""
        if not text:
            raise ValueError("empty text")
        response = self._call("embed", "/embeddings", _embed_payload(text, config), config)
        try:
            return TokenEmbeddingSequence.from_lists(
                config.model_id, response["tokens"], response["vectors"]
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ProtocolError(f"invalid embedding response: {exc}") from None

    def embedder(self, config: ModelConfig) -> Callable[[str], TokenEmbeddingSequence]:
        """Bind embed_tokens to one model config."""
        return lambda text: self.embed_tokens(text, config)

    def map_bounded(self, fn: Callable[[T], U], items: Sequence[T]) -> list[U]:
        """Apply fn to items with at most ``concurrency`` in flight; order preserved."""
        if self.concurrency == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
            return list(pool.map(fn, items))


class FileEmbedder:
    """Embedding source backed by an offline embedding file, keyed by text."""

    def __init__(self, entries: Mapping[str, TokenEmbeddingSequence]):
        self.entries = dict(entries)

    def __call__(self, text: str) -> TokenEmbeddingSequence:
        try:
            return self.entries[text]
        except KeyError:
            raise EmbeddingFileError(
                f"no stored embedding for text {text!r}; regenerate the embedding file"
            ) from None


def load_embedding_file(path: str | Path) -> dict[str, TokenEmbeddingSequence]:
    """Load an offline embedding file: one JSONL record per text.

    Record shape: {"text": str, "model_id": str, "tokens": [str],
    "vectors": [[float]]}.  Validation matches embed_tokens.
    """
    path = Path(path)
    entries: dict[str, TokenEmbeddingSequence] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingFileError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            missing = [f for f in ("text", "model_id", "tokens", "vectors") if f not in record]
            if missing:
                raise EmbeddingFileError(
                    f"{path}:{line_no}: missing field(s) {', '.join(missing)}"
                )
            if record["text"] in entries:
                raise EmbeddingFileError(f"{path}:{line_no}: duplicate entry for text")
            try:
                seq = TokenEmbeddingSequence.from_lists(
                    record["model_id"], record["tokens"], record["vectors"]
                )
            except (ValueError, TypeError) as exc:
                raise EmbeddingFileError(f"{path}:{line_no}: {exc}") from None
            entries[record["text"]] = seq
    return entries


def write_embedding_file(path: str | Path, entries: Mapping[str, TokenEmbeddingSequence]) -> None:
    """Write text -> embedding-sequence entries in the offline file format."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for text, seq in entries.items():
            record = {
                "text": text,
                "model_id": seq.model_id,
                "tokens": list(seq.tokens),
                "vectors": [list(vec) for vec in seq.vectors],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
