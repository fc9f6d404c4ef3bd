"""Independent brute-force metric implementations used as test oracles.

These deliberately avoid the library's metric code paths: everything is
computed from first principles with plain loops so the two routes can be
compared to 1e-9.
"""

from __future__ import annotations

import math


def brute_factual(linked: list[tuple[str, str | None]], k: int) -> float:
    window = linked[:k]
    if not window:
        return 0.0
    hits = 0
    for _, game_id in window:
        if game_id is not None:
            hits += 1
    return hits / len(window)


def brute_hit(items: list[str], gt: set[str], k: int) -> int:
    for g in items[:k]:
        if g in gt:
            return 1
    return 0


def brute_precision(items: list[str], gt: set[str], k: int) -> float:
    top = items[:k]
    if not top:
        return 0.0
    return sum(1 for g in top if g in gt) / len(top)


def brute_similar(embeddings: dict[str, list[float]], items: list[str],
                  gt: set[str], k: int) -> float | None:
    top = items[:k]
    if not top:
        return None

    def centroid(ids):
        dim = len(next(iter(embeddings.values())))
        total = [0.0] * dim
        for g in ids:
            for i, x in enumerate(embeddings[g]):
                total[i] += x
        mean = [x / len(ids) for x in total]
        norm = math.sqrt(sum(x * x for x in mean))
        if norm == 0.0:
            return mean
        return [x / norm for x in mean]

    a = centroid(top)
    b = centroid(sorted(gt))
    return sum(x * y for x, y in zip(a, b))


def brute_pop(items: list[str], popular: set[str], k: int) -> float:
    top = items[:k]
    if not top:
        return 0.0
    return sum(1 for g in top if g in popular) / len(top)


def brute_gt_pop(gt: set[str], popular: set[str]) -> float:
    return sum(1 for g in gt if g in popular) / len(gt)


def brute_rpop(pop_rec_values: list[float], pop_gt_values: list[float]) -> float | None:
    mean_gt = sum(pop_gt_values) / len(pop_gt_values)
    if mean_gt == 0.0:
        return None
    mean_rec = sum(pop_rec_values) / len(pop_rec_values)
    return mean_rec / mean_gt


def brute_entropy(lists: list[list[str]]) -> float:
    counts: dict[str, int] = {}
    total = 0
    for items in lists:
        for g in items:
            counts[g] = counts.get(g, 0) + 1
            total += 1
    entropy = 0.0
    for c in counts.values():
        p = c / total
        entropy -= p * math.log(p, 2)
    return entropy


def brute_maxfreq(lists: list[list[str]]) -> float:
    presence: dict[str, int] = {}
    for items in lists:
        for g in set(items):
            presence[g] = presence.get(g, 0) + 1
    if not presence:
        return 0.0
    return max(presence.values()) / len(lists)
