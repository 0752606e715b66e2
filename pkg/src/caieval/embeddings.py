"""Embedding acquisition and vector geometry.

Three providers cover the practical cases: vectors shipped alongside the
corpus (file), a hosted encoder behind the common embeddings-endpoint shape
(remote), and a deterministic feature-hashing encoder for tests and offline
runs (hash).  All vectors are float64 and zero vectors are rejected at
ingestion, so cosine is total on valid data.
"""
from __future__ import annotations

import functools
import hashlib
import json
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import requests

from ._http import BadResponseError, TransportError, post_json, with_retries
from .corpus import Corpus, TextInstance
from .validation import as_embedding

_WORD_RE = re.compile(r"\w+")


class EmbeddingProviderError(RuntimeError):
    """Raised when a provider cannot produce a vector for an instance."""


def cosine(u, v) -> float:
    """Cosine similarity: the normalized dot product of two nonzero vectors."""
    a = as_embedding(u, name="u")
    b = as_embedding(v, dim=a.size, name="v")
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def hash_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic embedding: feature-hash word unigrams into ``dim`` signed
    buckets with a seeded hash, then L2-normalize.

    Identical texts map to identical vectors; token-count scalings of a text
    map to parallel vectors.  Empty or whitespace-only text is rejected.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    tokens = _WORD_RE.findall(text.lower())
    if not tokens:
        raise ValueError("cannot embed empty or whitespace-only text")
    key = str(seed).encode("utf-8")
    vec = np.zeros(dim, dtype=np.float64)
    for token, count in Counter(tokens).items():
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16, key=key).digest()
        bucket = int.from_bytes(digest[:8], "little") % dim
        sign = 1.0 if digest[8] % 2 == 0 else -1.0
        vec[bucket] += sign * count
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("feature hashing collapsed the text to a zero vector")
    return vec / norm


class EmbeddingProvider:
    """Interface: turn text instances into fixed-dimension vectors."""

    kind: str = ""

    @property
    def dim(self) -> int | None:
        raise NotImplementedError

    def info(self) -> dict:
        raise NotImplementedError

    def vectors(self, instances: Sequence[TextInstance]) -> list[np.ndarray]:
        raise NotImplementedError


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic feature-hashing provider, useful offline and in tests."""

    kind = "hash"

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self._dim = dim
        self.seed = seed

    @property
    def dim(self) -> int:
        return self._dim

    def info(self) -> dict:
        return {"kind": self.kind, "dim": self._dim, "seed": self.seed}

    def vectors(self, instances: Sequence[TextInstance]) -> list[np.ndarray]:
        return [hash_embed(inst.text, self._dim, self.seed) for inst in instances]


class FileEmbeddingProvider(EmbeddingProvider):
    """Vectors read from a jsonl file (sidecar or corpus-jsonl), matched by id."""

    kind = "file"

    def __init__(self, vectors: Mapping[str, np.ndarray], source: str = "<memory>"):
        if not vectors:
            raise EmbeddingProviderError(f"{source}: no vectors loaded")
        self.source = source
        self._vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        for iid, values in vectors.items():
            vec = as_embedding(values, name=f"vector for id {iid!r}")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingProviderError(
                    f"{source}: inconsistent embedding dimension for id {iid!r} "
                    f"({vec.size} != {dim})"
                )
            self._vectors[str(iid)] = vec
        self._dim = dim

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "FileEmbeddingProvider":
        path = Path(path)
        vectors: dict[str, np.ndarray] = {}
        with path.open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "id" not in obj:
                    continue  # tolerate corpus-jsonl header lines
                if obj.get("vector") is None:
                    raise EmbeddingProviderError(
                        f"{path.name}:{lineno}: no vector for id {obj['id']!r}"
                    )
                vectors[str(obj["id"])] = obj["vector"]
        return cls(vectors, source=str(path))

    @classmethod
    def from_corpus(cls, corpus: Corpus, source: str = "<corpus>") -> "FileEmbeddingProvider":
        return cls(corpus.vectors(), source=source)

    @property
    def dim(self) -> int:
        return self._dim

    def info(self) -> dict:
        return {"kind": self.kind, "dim": self._dim, "source": self.source}

    def vectors(self, instances: Sequence[TextInstance]) -> list[np.ndarray]:
        out = []
        for inst in instances:
            if inst.id not in self._vectors:
                raise EmbeddingProviderError(f"{self.source}: missing vector for id {inst.id!r}")
            out.append(self._vectors[inst.id])
        return out


class RemoteEmbeddingProvider(EmbeddingProvider):
    """Hosted encoder speaking the prevailing embeddings-endpoint shape.

    POSTs ``{"model": ..., "input": [texts]}`` to ``<base_url>/embeddings`` and
    reads ``{"data": [{"index": i, "embedding": [...]}]}``.  Requests are
    batched, optionally issued in parallel, and retried with exponential
    backoff on transport/5xx failures.
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "",
        batch_size: int = 64,
        max_parallel: int = 1,
        max_attempts: int = 3,
        base_backoff_ms: int = 250,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        if batch_size < 1 or max_parallel < 1:
            raise ValueError("batch_size and max_parallel must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.batch_size = batch_size
        self.max_parallel = max_parallel
        self.max_attempts = max_attempts
        self.base_backoff_ms = base_backoff_ms
        self.timeout = timeout
        self.session = session or requests.Session()
        self._dim: int | None = None

    @property
    def dim(self) -> int | None:
        return self._dim

    def info(self) -> dict:
        return {"kind": self.kind, "dim": self._dim, "model": self.model, "base_url": self.base_url}

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            import os

            key = os.environ.get(self.api_key_env)
            if not key:
                raise EmbeddingProviderError(
                    f"API key environment variable {self.api_key_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        url = f"{self.base_url}/embeddings"
        payload = {"model": self.model, "input": texts}
        request = functools.partial(post_json, self.session, url, payload, self._headers(), self.timeout)
        try:
            body = with_retries(request, self.max_attempts, self.base_backoff_ms / 1000.0)
        except TransportError as exc:
            raise EmbeddingProviderError(f"retries exhausted: {exc}") from exc
        except BadResponseError as exc:
            raise EmbeddingProviderError(str(exc)) from exc
        data = body.get("data")
        if not isinstance(data, list) or len(data) != len(texts):
            raise EmbeddingProviderError(
                f"embedding endpoint returned {0 if not isinstance(data, list) else len(data)} "
                f"vectors for {len(texts)} inputs"
            )
        ordered = sorted(data, key=lambda item: item["index"])
        return [as_embedding(item["embedding"], name="remote embedding") for item in ordered]

    def vectors(self, instances: Sequence[TextInstance]) -> list[np.ndarray]:
        texts = [inst.text for inst in instances]
        batches = [texts[i : i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        if self.max_parallel > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=self.max_parallel) as pool:
                results = list(pool.map(self._embed_batch, batches))
        else:
            results = [self._embed_batch(batch) for batch in batches]
        out: list[np.ndarray] = []
        for vecs in results:
            out.extend(vecs)
        for vec in out:
            if self._dim is None:
                self._dim = vec.size
            elif vec.size != self._dim:
                raise EmbeddingProviderError(
                    f"inconsistent embedding dimension from remote provider "
                    f"({vec.size} != {self._dim})"
                )
        return out


def embed_corpus(provider: EmbeddingProvider, corpus: Corpus) -> dict[str, np.ndarray]:
    """One vector per corpus instance, keyed by id, in corpus order."""
    vectors = provider.vectors(corpus.instances)
    dims = {vec.size for vec in vectors}
    if len(dims) > 1:
        raise EmbeddingProviderError(f"provider returned mixed dimensions {sorted(dims)}")
    return {inst.id: vec for inst, vec in zip(corpus.instances, vectors)}
