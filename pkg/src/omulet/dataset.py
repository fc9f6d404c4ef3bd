"""Dataset construction: from raw community threads to evaluation rows.

Ingestion starts from already-collected request records (one post plus its
comments, each with net upvotes and pre-extracted candidate game names).
Names are linked to catalog ids with the fuzzy linker, oracles survive the
net-upvote filter only when some comment with at least one net upvote
mentions them, and candidate sets are expanded from the oracles' CF and
content neighbors, scored by how many distinct sources produced them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog
from .errors import ValidationError
from .toolbox import (
    get_game_id_from_fuzzy_name,
    get_similar_games_cf,
    get_similar_games_content,
)

MAX_CANDIDATES = 30
NEIGHBOR_LIMIT = 10


@dataclass(frozen=True)
class RawComment:
    text: str
    net_upvotes: int
    extracted_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class RawRequestRecord:
    request_id: str
    request_text: str
    comments: tuple[RawComment, ...] = ()


@dataclass
class LinkedRecord:
    record: RawRequestRecord
    # One entry per comment: ordered linked ids (unlinkable names dropped).
    comment_ids: list[list[str]] = field(default_factory=list)
    audit: list[tuple[str, str | None]] = field(default_factory=list)


def load_raw_records(path: str | Path) -> list[RawRequestRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                comments = tuple(
                    RawComment(
                        text=str(c.get("text", "")),
                        net_upvotes=int(c["net_upvotes"]),
                        extracted_names=tuple(str(n) for n in c.get("extracted_names", [])),
                    )
                    for c in obj.get("comments", [])
                )
                records.append(
                    RawRequestRecord(str(obj["request_id"]), str(obj["request_text"]), comments)
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad raw record ({exc})") from exc
    return records


def link_oracles(catalog: Catalog, record: RawRequestRecord) -> list[tuple[str, str | None]]:
    """Link every extracted name; unlinkable names kept with None for audit."""
    return [
        (name, get_game_id_from_fuzzy_name(catalog, name))
        for comment in record.comments
        for name in comment.extracted_names
    ]


def link_record(catalog: Catalog, record: RawRequestRecord) -> LinkedRecord:
    linked = LinkedRecord(record=record)
    for comment in record.comments:
        ids = []
        for name in comment.extracted_names:
            game_id = get_game_id_from_fuzzy_name(catalog, name)
            linked.audit.append((name, game_id))
            if game_id is not None:
                ids.append(game_id)
        linked.comment_ids.append(ids)
    return linked


def filter_by_upvotes(records: list[LinkedRecord]) -> dict[str, list[str]]:
    """Oracle ids per request, kept only with community agreement.

    A game survives iff at least one comment mentioning it has >= 1 net
    upvote (the rule is per comment, so a -2 and a +3 mention both naming
    the same game keep it). Requests with no survivors are dropped.
    """
    surviving: dict[str, list[str]] = {}
    for linked in records:
        kept: list[str] = []
        seen: set[str] = set()
        endorsed = {
            game_id
            for comment, ids in zip(linked.record.comments, linked.comment_ids)
            if comment.net_upvotes >= 1
            for game_id in ids
        }
        for ids in linked.comment_ids:
            for game_id in ids:
                if game_id in endorsed and game_id not in seen:
                    seen.add(game_id)
                    kept.append(game_id)
        if kept:
            surviving[linked.record.request_id] = kept
    return surviving


def generate_candidates(
    catalog: Catalog, oracle_ids: list[str], max_candidates: int = MAX_CANDIDATES
) -> list[str]:
    """Oracles plus their CF/content neighbors, scored by source count.

    Each oracle's CF list, each oracle's content list, and oracle
    membership itself each count as one source. Ordering is score
    descending, oracles above non-oracles at equal score, then catalog
    rank ascending. When the cap binds, oracles fill slots first.
    """
    if not oracle_ids:
        raise ValidationError("candidate generation needs at least one oracle id")
    oracle_set = set(oracle_ids)
    scores: dict[str, int] = {}
    for oracle in oracle_ids:
        if oracle not in catalog:
            continue
        scores[oracle] = scores.get(oracle, 0) + 1
        for neighbors in (
            get_similar_games_cf(catalog, oracle, NEIGHBOR_LIMIT),
            get_similar_games_content(catalog, oracle, NEIGHBOR_LIMIT),
        ):
            for game_id in neighbors:
                scores[game_id] = scores.get(game_id, 0) + 1
    if not scores:
        raise ValidationError("no oracle id exists in the catalog")

    ordered = sorted(
        scores,
        key=lambda g: (-scores[g], g not in oracle_set, catalog.games[g].rank),
    )
    if len(ordered) <= max_candidates:
        return ordered
    oracles_in_order = [g for g in ordered if g in oracle_set]
    selected = set(oracles_in_order[:max_candidates])
    for game_id in ordered:
        if len(selected) >= max_candidates:
            break
        selected.add(game_id)
    return [g for g in ordered if g in selected]


def export_eval_requests(
    records: list[LinkedRecord],
    candidates: dict[str, list[str]],
    out_path: str | Path,
    annotations: dict[str, dict[str, bool]] | None = None,
) -> int:
    """Write the evaluation request file; returns the number of rows.

    With annotations, the ground truth is the candidates marked relevant;
    without, it is the surviving oracle ids. Requests whose ground truth
    comes out empty are dropped.
    """
    surviving = filter_by_upvotes(records)
    upvotes_by_game: dict[str, dict[str, int]] = {}
    for linked in records:
        per_game = upvotes_by_game.setdefault(linked.record.request_id, {})
        for comment, ids in zip(linked.record.comments, linked.comment_ids):
            for game_id in ids:
                previous = per_game.get(game_id)
                if previous is None or comment.net_upvotes > previous:
                    per_game[game_id] = comment.net_upvotes

    if annotations:
        for request_id, marks in annotations.items():
            pool = set(candidates.get(request_id, []))
            unknown = sorted(set(marks) - pool)
            if unknown:
                raise ValidationError(
                    f"annotations for {request_id!r} reference non-candidates: {unknown}"
                )

    rows = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for linked in records:
            request_id = linked.record.request_id
            oracles = surviving.get(request_id)
            if not oracles:
                continue
            if annotations is not None and request_id in annotations:
                marks = annotations[request_id]
                ground_truth = [g for g in candidates.get(request_id, []) if marks.get(g)]
            else:
                ground_truth = list(oracles)
            if not ground_truth:
                continue
            row = {
                "request_id": request_id,
                "request": linked.record.request_text,
                "ground_truth": ground_truth,
                "oracles": [
                    {"id": g, "upvotes": upvotes_by_game[request_id].get(g, 0)} for g in oracles
                ],
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            rows += 1
    return rows
