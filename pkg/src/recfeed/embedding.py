"""Text embedding providers and vector similarity.

Vectors are plain numpy float64 arrays. Every provider returns unit-norm
vectors of its configured dimension; the hashed baseline is fully
deterministic across runs and platforms, the external provider talks to an
HTTP endpoint. Both cache by text so catalogs are embedded once.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np

DEFAULT_DIM = 64

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingError(ValueError):
    """Bad embedding input or incompatible vector shapes."""


class EmbeddingTransportError(RuntimeError):
    """External embedding endpoint unreachable or returned garbage."""

    def __init__(self, endpoint: str, detail: str):
        super().__init__(f"embedding endpoint {endpoint}: {detail}")
        self.endpoint = endpoint
        self.detail = detail


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]; zero vectors score 0.0.

    The zero-vector rule keeps scoring alive for commands that embed to
    nothing (punctuation-only input) instead of crashing the round.
    """
    if a.shape != b.shape:
        raise EmbeddingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    value = float(np.dot(a, b)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))


def _token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=b"bucket").digest()
    return int.from_bytes(digest, "big") % dim


def _token_sign(token: str) -> float:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=1, person=b"sign").digest()
    return 1.0 if digest[0] & 1 else -1.0


class EmbeddingProvider(Protocol):
    kind: str
    dim: int

    def embed(self, text: str) -> np.ndarray: ...

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class _CachingProvider:
    """Shared text-keyed cache; subclasses implement _compute_batch."""

    kind = "base"

    def __init__(self, dim: int):
        if dim <= 0:
            raise EmbeddingError("embedding dimension must be positive")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _cache_key(self, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return f"{self.kind}:{self.dim}:{digest}"

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        for text in texts:
            if not text or not text.strip():
                raise EmbeddingError("cannot embed empty text")
        keys = [self._cache_key(t) for t in texts]
        with self._lock:
            missing = [(i, t) for i, (k, t) in enumerate(zip(keys, texts)) if k not in self._cache]
        if missing:
            computed = self._compute_batch([t for _, t in missing])
            with self._lock:
                for (i, _), vec in zip(missing, computed):
                    vec.flags.writeable = False
                    self._cache[keys[i]] = vec
        with self._lock:
            return [self._cache[k] for k in keys]

    def _compute_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        raise NotImplementedError


class HashedEmbeddingProvider(_CachingProvider):
    """Deterministic offline baseline: signed hashing of lowercase tokens.

    Each token hashes to one bucket with a +/-1 sign drawn from a second
    hash; counts accumulate and the result is L2-normalized, so token
    order never matters and repeated tokens leave the direction unchanged.
    """

    kind = "hashed"

    def __init__(self, dim: int = DEFAULT_DIM):
        super().__init__(dim)

    def _compute_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            vec = np.zeros(self.dim, dtype=np.float64)
            for token in _TOKEN_RE.findall(text.lower()):
                vec[_token_bucket(token, self.dim)] += _token_sign(token)
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec /= norm
            out.append(vec)
        return out


class ExternalEmbeddingProvider(_CachingProvider):
    """Client for a batch embedding endpoint.

    Wire contract: ``POST {"texts": [..]}`` returning
    ``{"vectors": [[..], ..]}`` with row order matching the input order.
    Responses are L2-normalized locally to keep the unit-norm convention.
    """

    kind = "external"

    def __init__(self, endpoint: str, dim: int = DEFAULT_DIM, client: httpx.Client | None = None):
        super().__init__(dim)
        if not endpoint:
            raise EmbeddingError("external provider requires an endpoint")
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=30.0)

    def _compute_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        try:
            response = self._client.post(self.endpoint, json={"texts": list(texts)})
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise EmbeddingTransportError(self.endpoint, str(exc)) from exc
        except ValueError as exc:
            raise EmbeddingTransportError(self.endpoint, f"invalid JSON: {exc}") from exc
        vectors = payload.get("vectors") if isinstance(payload, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbeddingTransportError(self.endpoint, "response rows do not match request")
        out = []
        for row in vectors:
            vec = np.asarray(row, dtype=np.float64)
            if vec.shape != (self.dim,) or not np.all(np.isfinite(vec)):
                raise EmbeddingTransportError(self.endpoint, "bad vector shape or values")
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec = vec / norm
            out.append(vec)
        return out


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "hashed"
    dim: int = DEFAULT_DIM
    endpoint: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("hashed", "external"):
            raise EmbeddingError(f"unknown provider kind {self.kind!r}")
        if self.dim <= 0:
            raise EmbeddingError("embedding dimension must be positive")
        if self.kind == "external" and not self.endpoint:
            raise EmbeddingError("external provider requires an endpoint")


def build_provider(config: EmbeddingProviderConfig) -> EmbeddingProvider:
    if config.kind == "hashed":
        return HashedEmbeddingProvider(dim=config.dim)
    return ExternalEmbeddingProvider(endpoint=config.endpoint or "", dim=config.dim)
