"""Evaluation metrics: factuality, relevance, novelty and coverage.

All rates live in [0, 1]; entropy is in bits (base-2 log) and rpop50 is a
ratio of dataset-level means. Hallucinated names never reach these
functions except through ``factual_at_k``, which is the one metric defined
over the raw generated names.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .catalog import Catalog, top_n_by_rank
from .embeddings import normalized_centroid
from .errors import ValidationError

POP_TOP_N = 50


def factual_at_k(outcome, k: int) -> float:
    """Linked fraction among the first min(k, n) generated names; 0 when none."""
    names = outcome.linked[:k]
    if not names:
        return 0.0
    return sum(1 for _, game_id in names if game_id is not None) / len(names)


def _require_gt(gt: Iterable[str]) -> set[str]:
    gt_set = set(gt)
    if not gt_set:
        raise ValidationError("ground-truth set must be non-empty")
    return gt_set


def hit_at_k(items: Sequence[str], gt: Iterable[str], k: int) -> int:
    gt_set = _require_gt(gt)
    return 1 if any(g in gt_set for g in items[:k]) else 0


def precision_at_k(items: Sequence[str], gt: Iterable[str], k: int) -> float:
    """Ground-truth fraction of the top-k, over the surviving item count."""
    gt_set = _require_gt(gt)
    top = items[:k]
    if not top:
        return 0.0
    return sum(1 for g in top if g in gt_set) / len(top)


def similar_at_k(catalog: Catalog, items: Sequence[str], gt: Iterable[str], k: int) -> float | None:
    """Cosine of the normalized embedding centroids; None when items empty."""
    gt_set = _require_gt(gt)
    top = items[:k]
    if not top:
        return None
    rec_centroid = normalized_centroid(
        np.stack([catalog.embedding_of(g) for g in top])
    )
    gt_centroid = normalized_centroid(
        np.stack([catalog.embedding_of(g) for g in sorted(gt_set)])
    )
    return float(np.dot(rec_centroid, gt_centroid))


def top_pop_set(catalog: Catalog, top_n: int = POP_TOP_N) -> frozenset[str]:
    if len(catalog) < top_n:
        raise ValidationError(f"catalog has {len(catalog)} items; need at least {top_n}")
    return frozenset(top_n_by_rank(catalog, top_n))


def pop50_at_k(catalog: Catalog, items: Sequence[str], k: int,
               top_n: int = POP_TOP_N) -> float:
    """Fraction of the top-k items that sit in the top-``top_n`` popular set."""
    popular = top_pop_set(catalog, top_n)
    top = items[:k]
    if not top:
        return 0.0
    return sum(1 for g in top if g in popular) / len(top)


def gt_pop50(catalog: Catalog, gt: Iterable[str], top_n: int = POP_TOP_N) -> float:
    """Top-``top_n`` membership fraction of a ground-truth set."""
    gt_set = _require_gt(gt)
    popular = top_pop_set(catalog, top_n)
    return sum(1 for g in gt_set if g in popular) / len(gt_set)


def rpop50(pop_rec_mean: float, pop_gt_mean: float) -> float | None:
    """Ratio of dataset-level means; None when the ground-truth mean is zero."""
    if pop_gt_mean == 0.0:
        return None
    return pop_rec_mean / pop_gt_mean


def entropy_at_k(all_topk_lists: Sequence[Sequence[str]], log_base: int = 2) -> float:
    """Shannon entropy of item frequencies over all recommended slots.

    Base 2 by default: a uniform draw over the 50 most popular items then
    scores log2(50) = 5.644 bits.
    """
    counts = Counter()
    for items in all_topk_lists:
        counts.update(items)
    total = sum(counts.values())
    if total == 0:
        raise ValidationError("entropy needs at least one non-empty recommendation list")
    return -sum((c / total) * math.log(c / total, log_base) for c in counts.values())


def maxfreq_at_k(all_topk_lists: Sequence[Sequence[str]]) -> float:
    """Share of requests containing the single most-recommended item."""
    if not all_topk_lists:
        raise ValidationError("maxfreq needs at least one request")
    presence = Counter()
    for items in all_topk_lists:
        presence.update(set(items))
    if not presence:
        return 0.0
    return max(presence.values()) / len(all_topk_lists)
