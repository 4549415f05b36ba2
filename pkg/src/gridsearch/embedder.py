"""Embedding providers: a remote HTTP client and deterministic local stand-ins.

Every provider exposes the same two calls, batch text embedding and single
image-crop embedding, and always returns float64 unit vectors.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .geometry import Rect

DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_BACKOFF = 0.5
DEFAULT_MAX_CONCURRENCY = 8

# Box coordinates are quantized to this step when used as cache keys, so
# float noise below visual relevance does not defeat crop caching.
BOX_QUANTUM = 1e-3

ENV_EMBEDDER_URL = "GRIDSEARCH_EMBEDDER_URL"
ENV_EMBEDDER_TOKEN = "GRIDSEARCH_EMBEDDER_TOKEN"


class EmbedderError(RuntimeError):
    """Embedding could not be produced."""


class TransportError(EmbedderError):
    """The embedding service was unreachable or kept failing."""


class DimensionMismatch(EmbedderError):
    """The service returned vectors of an unexpected dimensionality."""


def quantize_box(box: Rect, quantum: float = BOX_QUANTUM) -> tuple[float, float, float, float]:
    return tuple(round(round(v / quantum) * quantum, 9) for v in box.as_tuple())


def _unit(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1:
        raise EmbedderError(f"expected a 1-D vector, got shape {vector.shape}")
    if not np.isfinite(vector).all():
        raise EmbedderError("non-finite values in embedding")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise EmbedderError("zero-norm embedding")
    return vector / norm


def _hash_seed(*parts: object) -> list[int]:
    digest = hashlib.sha256("\x1f".join(map(str, parts)).encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]


def hash_vector(dim: int, *parts: object) -> np.ndarray:
    """A reproducible pseudo-random unit vector keyed by the given parts."""
    rng = np.random.default_rng(_hash_seed(*parts))
    return _unit(rng.standard_normal(dim))


class SyntheticEmbedder:
    """Offline embedder: content-hashed unit vectors, stable across runs.

    Text and crop vectors are unrelated, which makes this useful for load,
    determinism, and ranking tests but not for semantic assertions.
    """

    def __init__(self, dim: int = 64, model_id: str = "synthetic") -> None:
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim
        self.model_id = model_id

    def embed_text(self, texts: list[str]) -> np.ndarray:
        if not texts or any(not t for t in texts):
            raise EmbedderError("texts must be non-empty")
        return np.stack(
            [hash_vector(self.dim, self.model_id, "text", t) for t in texts]
        )

    def embed_crop(self, image_uri: str, box: Rect) -> np.ndarray:
        key = quantize_box(box)
        return hash_vector(self.dim, self.model_id, "crop", image_uri, key)


@dataclass(frozen=True)
class Placement:
    """One named content token occupying a region of a synthetic image."""

    token: str
    rect: Rect


class SceneEmbedder:
    """Compositional embedder over synthetic scenes of placed content tokens.

    A crop's embedding is the overlap-weighted sum of the embeddings of the
    tokens it covers, so a text query matching a token scores highest on
    crops that isolate that token's region. Unknown images embed to a
    content-free background vector.
    """

    def __init__(
        self,
        scenes: dict[str, list[Placement]],
        dim: int = 64,
        model_id: str = "scene",
        background_weight: float = 0.05,
    ) -> None:
        self.scenes = scenes
        self.dim = dim
        self.model_id = model_id
        self.background_weight = background_weight

    def token_vector(self, token: str) -> np.ndarray:
        return hash_vector(self.dim, self.model_id, "token", token)

    def embed_text(self, texts: list[str]) -> np.ndarray:
        if not texts or any(not t for t in texts):
            raise EmbedderError("texts must be non-empty")
        return np.stack([self.token_vector(t) for t in texts])

    def embed_crop(self, image_uri: str, box: Rect) -> np.ndarray:
        total = self.background_weight * hash_vector(
            self.dim, self.model_id, "background", image_uri
        )
        for placement in self.scenes.get(image_uri, []):
            ix = min(box.x2, placement.rect.x2) - max(box.x1, placement.rect.x1)
            iy = min(box.y2, placement.rect.y2) - max(box.y1, placement.rect.y1)
            if ix <= 0.0 or iy <= 0.0:
                continue
            # Weight by the fraction of the token's own extent inside the crop.
            weight = (ix * iy) / placement.rect.area
            total = total + weight * self.token_vector(placement.token)
        return _unit(total)


class CropCache:
    """On-disk cache of crop embeddings keyed by (model, image, quantized box)."""

    def __init__(self, directory: str) -> None:
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, model_id: str, image_uri: str, key: tuple) -> str:
        digest = hashlib.sha256(
            "\x1f".join([model_id, image_uri, repr(key)]).encode("utf-8")
        ).hexdigest()
        return os.path.join(self.directory, digest + ".npy")

    def get(self, model_id: str, image_uri: str, key: tuple) -> np.ndarray | None:
        path = self._path(model_id, image_uri, key)
        with self._lock:
            if not os.path.exists(path):
                return None
            return np.load(path)

    def put(
        self, model_id: str, image_uri: str, key: tuple, vector: np.ndarray
    ) -> None:
        path = self._path(model_id, image_uri, key)
        with self._lock:
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                np.save(fh, vector)
            os.replace(tmp, path)


class HttpEmbedder:
    """Client for a remote embedding service.

    Wire protocol (versioned in the path):
        POST {base}/v1/embed/text  {"model_id": ..., "texts": [...]}
        POST {base}/v1/embed/crop  {"model_id": ..., "image_uri": ..., "box": [x1,y1,x2,y2]}
    both answering {"vectors": [[...], ...]}. Failed requests are retried with
    exponential backoff; text results are cached in memory by content, crop
    results optionally on disk.
    """

    def __init__(
        self,
        base_uri: str,
        model_id: str,
        dim: int,
        token: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff: float = DEFAULT_BACKOFF,
        max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
        crop_cache: CropCache | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.base_uri = base_uri.rstrip("/")
        self.model_id = model_id
        self.dim = dim
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.crop_cache = crop_cache
        self._session = session or requests.Session()
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"
        self._text_cache: dict[tuple[str, str], np.ndarray] = {}
        self._cache_lock = threading.Lock()
        self._request_slots = threading.Semaphore(max_concurrency)

    @classmethod
    def from_env(cls, model_id: str, dim: int, **kwargs) -> "HttpEmbedder":
        base_uri = os.environ.get(ENV_EMBEDDER_URL)
        if not base_uri:
            raise EmbedderError(f"{ENV_EMBEDDER_URL} is not set")
        token = os.environ.get(ENV_EMBEDDER_TOKEN)
        return cls(base_uri, model_id, dim, token=token, **kwargs)

    def _post(self, path: str, payload: dict) -> dict:
        url = self.base_uri + path
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._request_slots:
                    response = self._session.post(
                        url, json=payload, timeout=self.timeout
                    )
                if response.status_code >= 500:
                    last_error = TransportError(
                        f"{url}: HTTP {response.status_code}"
                    )
                    continue
                if response.status_code != 200:
                    raise EmbedderError(
                        f"{url}: HTTP {response.status_code}: {response.text[:200]}"
                    )
                return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise TransportError(
            f"{url}: failed after {self.max_attempts} attempts: {last_error}"
        )

    def _parse_vectors(self, body: dict, expected: int) -> np.ndarray:
        try:
            vectors = body["vectors"]
        except (KeyError, TypeError) as exc:
            raise EmbedderError(f"malformed response: {exc}") from exc
        if len(vectors) != expected:
            raise EmbedderError(
                f"service returned {len(vectors)} vectors, expected {expected}"
            )
        out = np.asarray(vectors, dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != self.dim:
            raise DimensionMismatch(
                f"service returned dim {out.shape[-1] if out.ndim else '?'}, "
                f"expected {self.dim}"
            )
        return np.stack([_unit(v) for v in out])

    def embed_text(self, texts: list[str]) -> np.ndarray:
        if not texts or any(not t for t in texts):
            raise EmbedderError("texts must be non-empty")
        with self._cache_lock:
            missing = [
                t for t in texts if (self.model_id, t) not in self._text_cache
            ]
            missing = list(dict.fromkeys(missing))
        if missing:
            body = self._post(
                "/v1/embed/text", {"model_id": self.model_id, "texts": missing}
            )
            vectors = self._parse_vectors(body, len(missing))
            with self._cache_lock:
                for text, vector in zip(missing, vectors):
                    self._text_cache[(self.model_id, text)] = vector
        with self._cache_lock:
            return np.stack([self._text_cache[(self.model_id, t)] for t in texts])

    def embed_crop(self, image_uri: str, box: Rect) -> np.ndarray:
        key = quantize_box(box)
        if self.crop_cache is not None:
            cached = self.crop_cache.get(self.model_id, image_uri, key)
            if cached is not None:
                return cached
        body = self._post(
            "/v1/embed/crop",
            {"model_id": self.model_id, "image_uri": image_uri, "box": list(key)},
        )
        vector = self._parse_vectors(body, 1)[0]
        if self.crop_cache is not None:
            self.crop_cache.put(self.model_id, image_uri, key, vector)
        return vector


def make_embedder(name: str, dim: int = 64, **kwargs):
    """Build an embedder by name: "synthetic" or "http"."""
    if name == "synthetic":
        return SyntheticEmbedder(dim=dim, **kwargs)
    if name == "http":
        model_id = kwargs.pop("model_id", "default")
        return HttpEmbedder.from_env(model_id, dim, **kwargs)
    raise ValueError(f"unknown embedder '{name}'")
