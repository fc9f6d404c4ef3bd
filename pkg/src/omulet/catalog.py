"""Immutable in-memory game catalog with prebuilt retrieval indices.

A catalog is loaded once from JSON-lines files and never mutated; every
other module treats it as a read-only snapshot. Loading builds:

* a popularity ranking (upvotes descending, ties by id),
* a BM25 index over name + description,
* an item-item collaborative-filtering index (cosine over binary
  user-item incidence vectors),
* a content-similarity index (exact pairwise cosine over embeddings,
  falling back to the deterministic trigram embedder),
* per-age-group popularity lists from labeled interactions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path

import numpy as np

from .embeddings import FALLBACK_DIM, trigram_embedding
from .errors import CatalogLoadError, ValidationError
from .search import Bm25Index

DEVICES = ("DESKTOP", "PHONE", "TABLET", "CONSOLE", "VR")
AGE_GROUPS = ("0-8", "9-12", "13-17", "18-24", "25-34", "35plus")


def default_genre_vocabulary() -> tuple[str, ...]:
    """The packaged 21-label genre vocabulary (overridable via config)."""
    text = resources.files("omulet.data").joinpath("genres.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class Game:
    id: str
    name: str
    genre: str
    description: str
    rank: int
    upvotes: int
    devices: frozenset[str]
    embedding: tuple[float, ...] = ()


@dataclass(frozen=True)
class InteractionLog:
    """Deduplicated (user, item) plays plus optional per-user age labels."""

    pairs: tuple[tuple[str, str], ...]
    user_ages: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class CatalogConfig:
    genre_vocabulary: tuple[str, ...] = ()
    fallback_embedding_dim: int = FALLBACK_DIM

    def vocabulary(self) -> tuple[str, ...]:
        return self.genre_vocabulary or default_genre_vocabulary()


class Catalog:
    """Read-only snapshot; safe for unlimited concurrent readers."""

    def __init__(
        self,
        games: dict[str, Game],
        genre_vocabulary: tuple[str, ...],
        top_by_rank: list[str],
        search_index: Bm25Index,
        cf_index: dict[str, list[tuple[str, float]]],
        content_index: dict[str, list[tuple[str, float]]],
        age_popularity: dict[str, list[str]],
    ):
        self.games = games
        self.genre_vocabulary = genre_vocabulary
        self.top_by_rank = top_by_rank
        self.search_index = search_index
        self.cf_index = cf_index
        self.content_index = content_index
        self.age_popularity = age_popularity

    def __len__(self) -> int:
        return len(self.games)

    def __contains__(self, game_id: str) -> bool:
        return game_id in self.games

    def embedding_of(self, game_id: str) -> np.ndarray:
        return np.asarray(self.games[game_id].embedding, dtype=np.float64)

    def index_manifest(self) -> str:
        """Canonical JSON of all derived indices, for determinism checks."""
        payload = {
            "top_by_rank": self.top_by_rank,
            "cf_index": {g: self.cf_index.get(g, []) for g in sorted(self.games)},
            "content_index": {g: self.content_index.get(g, []) for g in sorted(self.games)},
            "age_popularity": {a: self.age_popularity.get(a, []) for a in AGE_GROUPS},
        }
        return json.dumps(payload, sort_keys=True)


def _read_jsonl(path: Path) -> list[tuple[int, dict]]:
    if not path.exists():
        raise CatalogLoadError(f"{path}: file not found")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CatalogLoadError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CatalogLoadError(f"{path}:{lineno}: expected an object")
            rows.append((lineno, obj))
    return rows


def _parse_games(path: Path, vocabulary: tuple[str, ...]) -> list[dict]:
    vocab = set(vocabulary)
    seen: set[str] = set()
    records = []
    bad_genres = []
    for lineno, obj in _read_jsonl(path):
        try:
            game_id = str(obj["id"])
            name = str(obj["name"])
            genre = str(obj["genre"])
            description = str(obj.get("description", ""))
            upvotes = int(obj.get("upvotes", 0))
            devices = [str(d) for d in obj.get("devices", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogLoadError(f"{path}:{lineno}: bad game record ({exc})") from exc
        if game_id in seen:
            raise ValidationError(f"duplicate game id {game_id!r} at {path}:{lineno}")
        seen.add(game_id)
        if genre not in vocab:
            bad_genres.append(f"{game_id}={genre!r}")
        if upvotes < 0:
            raise ValidationError(f"negative upvotes for {game_id!r} at {path}:{lineno}")
        unknown_devices = sorted(set(devices) - set(DEVICES))
        if unknown_devices:
            raise ValidationError(
                f"unknown devices {unknown_devices} for {game_id!r} at {path}:{lineno}"
            )
        embedding = obj.get("embedding")
        if embedding is not None:
            embedding = [float(x) for x in embedding]
        records.append(
            {
                "id": game_id,
                "name": name,
                "genre": genre,
                "description": description,
                "upvotes": upvotes,
                "devices": frozenset(devices),
                "embedding": embedding,
            }
        )
    if bad_genres:
        raise ValidationError(f"genre labels outside the vocabulary: {', '.join(bad_genres)}")
    if not records:
        raise CatalogLoadError(f"{path}: no game records")
    return records


def load_interactions(path: Path, known_ids: set[str]) -> InteractionLog:
    pairs: list[tuple[str, str]] = []
    seen_pairs: set[tuple[str, str]] = set()
    user_ages: dict[str, str] = {}
    for lineno, obj in _read_jsonl(path):
        try:
            user_id = str(obj["user_id"])
            item_id = str(obj["item_id"])
        except (KeyError, TypeError) as exc:
            raise CatalogLoadError(f"{path}:{lineno}: bad interaction record ({exc})") from exc
        if item_id not in known_ids:
            raise ValidationError(f"interaction references unknown item {item_id!r} at {path}:{lineno}")
        age = obj.get("age_group")
        if age is not None:
            if age not in AGE_GROUPS:
                raise ValidationError(f"unknown age group {age!r} at {path}:{lineno}")
            user_ages.setdefault(user_id, age)
        if (user_id, item_id) not in seen_pairs:
            seen_pairs.add((user_id, item_id))
            pairs.append((user_id, item_id))
    return InteractionLog(pairs=tuple(pairs), user_ages=user_ages)


def _build_cf_index(
    log: InteractionLog, rank_of: dict[str, int]
) -> dict[str, list[tuple[str, float]]]:
    item_users: dict[str, set[str]] = {}
    user_items: dict[str, list[str]] = {}
    for user_id, item_id in log.pairs:
        item_users.setdefault(item_id, set()).add(user_id)
        user_items.setdefault(user_id, []).append(item_id)

    co_counts: dict[tuple[str, str], int] = {}
    for items in user_items.values():
        for a, b in combinations(sorted(set(items)), 2):
            co_counts[(a, b)] = co_counts.get((a, b), 0) + 1

    neighbors: dict[str, dict[str, float]] = {}
    for (a, b), co in co_counts.items():
        sim = round(float(co / np.sqrt(len(item_users[a]) * len(item_users[b]))), 12)
        neighbors.setdefault(a, {})[b] = sim
        neighbors.setdefault(b, {})[a] = sim

    index: dict[str, list[tuple[str, float]]] = {}
    for item_id, sims in neighbors.items():
        ordered = sorted(sims.items(), key=lambda kv: (-kv[1], rank_of[kv[0]]))
        index[item_id] = ordered
    return index


def _build_content_index(
    ids: list[str], matrix: np.ndarray, rank_of: dict[str, int]
) -> dict[str, list[tuple[str, float]]]:
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = matrix / safe[:, None]
    unit[norms == 0.0] = 0.0
    sims = unit @ unit.T
    index: dict[str, list[tuple[str, float]]] = {}
    for i, game_id in enumerate(ids):
        # Scores are rounded so that mathematically equal cosines collapse
        # to exact ties regardless of accumulation order; ties then fall
        # back to popularity rank deterministically.
        row = [
            (other, round(float(sims[i, j]), 12))
            for j, other in enumerate(ids)
            if j != i
        ]
        row.sort(key=lambda kv: (-kv[1], rank_of[kv[0]]))
        index[game_id] = row
    return index


def _build_age_popularity(
    log: InteractionLog, rank_of: dict[str, int]
) -> dict[str, list[str]]:
    by_group: dict[str, dict[str, int]] = {}
    for user_id, item_id in log.pairs:
        group = log.user_ages.get(user_id)
        if group is None:
            continue
        counts = by_group.setdefault(group, {})
        counts[item_id] = counts.get(item_id, 0) + 1
    return {
        group: sorted(counts, key=lambda g: (-counts[g], rank_of[g]))
        for group, counts in by_group.items()
    }


def load_catalog(
    games_path: str | Path,
    interactions_path: str | Path | None = None,
    embeddings_path: str | Path | None = None,
    config: CatalogConfig | None = None,
) -> Catalog:
    """Load and fully index a catalog from JSON-lines files.

    Supplied embeddings (inline in the games file or via a separate
    embeddings file) must cover every game and share one dimension;
    otherwise the fallback embedder is used for the whole catalog.
    Partial coverage is rejected rather than silently mixed.
    """
    config = config or CatalogConfig()
    vocabulary = config.vocabulary()
    records = _parse_games(Path(games_path), vocabulary)

    # Popularity: upvotes descending, ties by id lexicographic.
    ordered = sorted(records, key=lambda r: (-r["upvotes"], r["id"]))
    rank_of = {r["id"]: i + 1 for i, r in enumerate(ordered)}
    top_by_rank = [r["id"] for r in ordered]

    supplied: dict[str, list[float]] = {
        r["id"]: r["embedding"] for r in records if r["embedding"] is not None
    }
    if embeddings_path is not None:
        for lineno, obj in _read_jsonl(Path(embeddings_path)):
            try:
                game_id = str(obj["id"])
                vector = [float(x) for x in obj["embedding"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise CatalogLoadError(
                    f"{embeddings_path}:{lineno}: bad embedding record ({exc})"
                ) from exc
            if game_id not in rank_of:
                raise ValidationError(
                    f"embedding row references unknown id {game_id!r} at {embeddings_path}:{lineno}"
                )
            supplied[game_id] = vector

    ids_in_file_order = [r["id"] for r in records]
    if supplied:
        missing = [g for g in ids_in_file_order if g not in supplied]
        if missing:
            raise ValidationError(
                f"embeddings cover only part of the catalog; missing: {', '.join(missing)}"
            )
        dims = {len(v) for v in supplied.values()}
        if len(dims) != 1:
            raise ValidationError(f"inconsistent embedding dimensions: {sorted(dims)}")
        vectors = {g: tuple(supplied[g]) for g in ids_in_file_order}
    else:
        # Trigram-embed the description; a game with an empty description
        # falls back to its name so every game has a usable vector.
        vectors = {
            r["id"]: tuple(
                trigram_embedding(
                    r["description"] or r["name"], config.fallback_embedding_dim
                )
            )
            for r in records
        }

    games = {
        r["id"]: Game(
            id=r["id"],
            name=r["name"],
            genre=r["genre"],
            description=r["description"],
            rank=rank_of[r["id"]],
            upvotes=r["upvotes"],
            devices=r["devices"],
            embedding=vectors[r["id"]],
        )
        for r in records
    }

    search_index = Bm25Index(
        [(g.id, f"{g.name} {g.description}", g.rank) for g in games.values()]
    )

    if interactions_path is not None:
        log = load_interactions(Path(interactions_path), set(games))
    else:
        log = InteractionLog(pairs=())
    cf_index = _build_cf_index(log, rank_of)
    age_popularity = _build_age_popularity(log, rank_of)

    matrix = np.array([vectors[g] for g in ids_in_file_order], dtype=np.float64)
    content_index = _build_content_index(ids_in_file_order, matrix, rank_of)

    return Catalog(
        games=games,
        genre_vocabulary=vocabulary,
        top_by_rank=top_by_rank,
        search_index=search_index,
        cf_index=cf_index,
        content_index=content_index,
        age_popularity=age_popularity,
    )


def top_n_by_rank(catalog: Catalog, n: int) -> list[str]:
    """The ``n`` most popular item ids, ascending rank."""
    if n < 1 or n > len(catalog):
        raise ValidationError(f"n must be in 1..{len(catalog)}, got {n}")
    return catalog.top_by_rank[:n]
