"""Deterministic text embeddings and small vector helpers.

When a catalog ships no precomputed embeddings, games are embedded with
hashed character-trigram term frequencies: every trigram of the normalized
text is hashed into one of ``FALLBACK_DIM`` buckets and the resulting count
vector is L2-normalized. The scheme needs no external model and is stable
across processes (the hash is keyed on file-independent bytes only).
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

FALLBACK_DIM = 256

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def _normalize_text(text: str) -> str:
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def _bucket(trigram: str, dim: int) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def trigram_embedding(text: str, dim: int = FALLBACK_DIM) -> np.ndarray:
    """Embed ``text`` as a unit vector of hashed trigram counts.

    Returns the zero vector when the text has no trigrams (too short or
    empty after normalization).
    """
    vec = np.zeros(dim, dtype=np.float64)
    normalized = _normalize_text(text)
    if not normalized:
        return vec
    padded = f" {normalized} "
    for i in range(len(padded) - 2):
        vec[_bucket(padded[i : i + 3], dim)] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def normalized_centroid(vectors: np.ndarray) -> np.ndarray:
    """Mean of the rows, L2-normalized (zero stays zero)."""
    centroid = np.asarray(vectors, dtype=np.float64).mean(axis=0)
    norm = float(np.linalg.norm(centroid))
    if norm > 0.0:
        centroid = centroid / norm
    return centroid
