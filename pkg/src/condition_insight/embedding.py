"""Text embedding providers for failure-mode alignment.

The default provider is fully offline and deterministic: a hashed
bag-of-tokens projected to a fixed dimension through a seeded random
matrix. The remote provider speaks the embedding-service HTTP contract.
"""

from __future__ import annotations

import hashlib
import os
import re
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import GatewayUnavailable

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingProvider(Protocol):
    """embed() must be deterministic and return unit-norm vectors of one dimension."""

    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HashedEmbeddingProvider:
    """Deterministic hashed bag-of-tokens embedding.

    Tokens hash to buckets via blake2b (stable across processes, unlike
    the builtin hash), counts are projected through a fixed seeded Gaussian
    matrix and unit-normalized. Token-free texts map to the first basis
    vector so every output has unit norm.
    """

    def __init__(self, dimension: int = 64, n_buckets: int = 4096, seed: int = 0):
        self.dimension = dimension
        self.n_buckets = n_buckets
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((n_buckets, dimension))

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.n_buckets

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension))
        for row, text in enumerate(texts):
            counts = np.zeros(self.n_buckets)
            for token in _TOKEN_RE.findall(text.lower()):
                counts[self._bucket(token)] += 1.0
            vector = counts @ self._projection
            norm = float(np.linalg.norm(vector))
            if norm == 0.0:
                vector = np.zeros(self.dimension)
                vector[0] = 1.0
                norm = 1.0
            out[row] = vector / norm
        return out


class RemoteEmbeddingProvider:
    """HTTP embedding service: POST {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        token_env: str = "GATEWAY_TOKEN",
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.dimension = dimension
        self.token_env = token_env
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        headers = {}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            response = requests.post(
                self.endpoint, json={"texts": list(texts)}, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            vectors = np.asarray(response.json()["vectors"], dtype=float)
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise GatewayUnavailable(f"embedding service failed: {exc}") from exc
        if vectors.ndim != 2 or vectors.shape != (len(texts), self.dimension):
            raise GatewayUnavailable(
                f"embedding service returned shape {vectors.shape}, "
                f"expected {(len(texts), self.dimension)}"
            )
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return vectors / norms
