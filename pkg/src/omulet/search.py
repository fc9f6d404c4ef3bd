"""Inverted-index BM25 search over short game texts.

Scoring is plain BM25 with k1=1.2, b=0.75 and the non-negative idf variant
idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Documents sharing no token
with the query score nothing and are never returned. Ties are broken by a
caller-supplied sort key (catalog popularity rank).
"""

from __future__ import annotations

import math
import re
from collections import Counter

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class Bm25Index:
    """Immutable BM25 index over (doc_id, text, tiebreak) entries."""

    def __init__(
        self,
        entries: list[tuple[str, str, int]],
        k1: float = BM25_K1,
        b: float = BM25_B,
    ):
        self.k1 = k1
        self.b = b
        self._tiebreak = {doc_id: tb for doc_id, _, tb in entries}
        self._doc_lens: dict[str, int] = {}
        # token -> doc_id -> term frequency
        self._postings: dict[str, dict[str, int]] = {}
        for doc_id, text, _ in entries:
            tokens = tokenize(text)
            self._doc_lens[doc_id] = len(tokens)
            for token, tf in Counter(tokens).items():
                self._postings.setdefault(token, {})[doc_id] = tf
        n_docs = len(entries)
        self._avgdl = (sum(self._doc_lens.values()) / n_docs) if n_docs else 0.0
        self._idf = {
            token: math.log(1.0 + (n_docs - len(docs) + 0.5) / (len(docs) + 0.5))
            for token, docs in self._postings.items()
        }

    def __len__(self) -> int:
        return len(self._doc_lens)

    def score(self, query: str) -> dict[str, float]:
        """BM25 scores for all documents matching at least one query token."""
        scores: dict[str, float] = {}
        for token in tokenize(query):
            idf = self._idf.get(token)
            if idf is None:
                continue
            for doc_id, tf in self._postings[token].items():
                dl = self._doc_lens[doc_id]
                denom = tf + self.k1 * (1.0 - self.b + self.b * dl / self._avgdl)
                scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (self.k1 + 1.0) / denom
        return scores

    def search(self, query: str, limit: int) -> list[str]:
        """Top ``limit`` doc ids by score, ties by the tiebreak key ascending."""
        if limit <= 0:
            return []
        scores = self.score(query)
        ranked = sorted(scores, key=lambda d: (-scores[d], self._tiebreak[d]))
        return ranked[:limit]
