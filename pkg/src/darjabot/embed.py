"""Sentence-embedding providers behind one small interface.

The engine never hosts an encoder itself. A remote provider speaks a tiny
JSON-over-HTTP contract; the hash-mock provider is a deterministic local
stand-in that hashes character 3-grams into signed buckets, preserving the
property that surface-similar texts get high cosine similarity.

Role prefixes ("query: " / "passage: ") are applied exactly once, here,
before any provider sees the text.
"""

from __future__ import annotations

import hashlib
import json
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ProviderError


class EmbeddingRole(Enum):
    QUERY = "query"
    PASSAGE = "passage"


_ROLE_PREFIX = {EmbeddingRole.QUERY: "query: ", EmbeddingRole.PASSAGE: "passage: "}


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "hash-mock"  # "hash-mock" | "remote"
    endpoint: str = ""
    dim: int = 384
    timeout_ms: int = 3000
    seed: int = 13
    max_inflight: int = 4

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError("embedding dimension must be at least 8")


@lru_cache(maxsize=1 << 18)
def _bucket_sign(seed: int, gram: str) -> tuple[int, int]:
    digest = hashlib.blake2b(f"{seed}\x1f{gram}".encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    return value & 0x7FFFFFFFFFFFFFFF, 1 if value >> 63 == 0 else -1


class HashMockEmbedder:
    """Seeded signed-hash of character 3-grams, L2-normalized.

    Identical (text, role, seed) always yields bit-identical vectors, which
    keeps every downstream retrieval test deterministic.
    """

    def __init__(self, dim: int = 384, seed: int = 13):
        if dim < 8:
            raise ValueError("embedding dimension must be at least 8")
        self.dim = dim
        self.seed = seed

    def _encode_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(text) - 2):
            bucket, sign = _bucket_sign(self.seed, text[i : i + 3])
            vec[bucket % self.dim] += sign
        norm = float(np.sqrt(vec @ vec))
        if norm == 0.0:
            basis = np.zeros(self.dim, dtype=np.float32)
            basis[0] = 1.0
            return basis
        return (vec / norm).astype(np.float32)

    def embed(self, texts: list[str], role: EmbeddingRole) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        prefix = _ROLE_PREFIX[role]
        return [self._encode_one(prefix + t) for t in texts]


class RemoteEmbedder:
    """HTTP provider: POST {"texts": [...], "role": "query"|"passage"}.

    Texts are sent already prefixed; the role field is informational so the
    server never prefixes a second time. Non-200 and transport errors are
    retryable; a dimension mismatch against the configured dim is fatal.
    """

    def __init__(self, config: ProviderConfig):
        if not config.endpoint:
            raise ValueError("remote embedder requires an endpoint")
        self.config = config
        self.dim = config.dim
        self._inflight = threading.Semaphore(config.max_inflight)

    def embed(self, texts: list[str], role: EmbeddingRole) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        prefix = _ROLE_PREFIX[role]
        payload = json.dumps({"texts": [prefix + t for t in texts], "role": role.value})
        request = urllib.request.Request(
            self.config.endpoint,
            data=payload.encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with self._inflight:
            try:
                with urllib.request.urlopen(request, timeout=self.config.timeout_ms / 1000.0) as resp:
                    if resp.status != 200:
                        raise ProviderError(
                            f"embedding endpoint returned HTTP {resp.status}", retryable=True
                        )
                    body = json.loads(resp.read().decode("utf-8"))
            except ProviderError:
                raise
            except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
                raise ProviderError(f"embedding endpoint unreachable: {exc}", retryable=True) from exc
        if int(body.get("dim", -1)) != self.dim:
            raise ProviderError(
                f"embedding dimension mismatch: endpoint says {body.get('dim')}, "
                f"configured {self.dim}",
                retryable=False,
            )
        vectors = body.get("vectors", [])
        if len(vectors) != len(texts):
            raise ProviderError(
                f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts",
                retryable=True,
            )
        out = []
        for row in vectors:
            vec = np.asarray(row, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise ProviderError("malformed vector in embedding response", retryable=False)
            norm = float(np.linalg.norm(vec))
            out.append(vec / norm if norm > 0 else vec)
        return out


def build_embedder(config: ProviderConfig):
    if config.kind == "hash-mock":
        return HashMockEmbedder(dim=config.dim, seed=config.seed)
    if config.kind == "remote":
        return RemoteEmbedder(config)
    raise ValueError(f"unknown embedding provider kind {config.kind!r}")
