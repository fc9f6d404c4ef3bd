"""The tool layer: pure functions over a catalog snapshot.

Four groups — lookup (game metadata), linking (fuzzy names and genres to
catalog entities), retrieval (search, similarity, age popularity, default
sampling) and formatting. Every tool is deterministic given (catalog,
args, seed) and never returns ids outside the catalog. There is
deliberately no ranking tool.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from .catalog import AGE_GROUPS, DEVICES, Catalog, top_n_by_rank
from .errors import NotFoundError, ValidationError

DEFAULT_SIMILAR_LIMIT = 10
DEFAULT_SEARCH_LIMIT = 10
DEFAULT_AGE_LIMIT = 10
DEFAULT_GAMES_POOL = 100

# Minimum normalized edit-distance similarity for the last linking stage.
# Precision is preferred over recall: a wrong link poisons every
# downstream retrieval that starts from it.
FUZZY_ACCEPT_THRESHOLD = 0.72

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

LOOKUP_ATTRIBUTES = ("name", "genre", "description", "rank")


@dataclass(frozen=True)
class ToolResult:
    """Uniform tool output: ordered item ids and/or a scalar payload."""

    tool_name: str
    items: tuple[str, ...] = ()
    scalar: str | int | bool | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"tool": self.tool_name, "items": list(self.items), "scalar": self.scalar}


def _require_game(catalog: Catalog, game_id: str):
    game = catalog.games.get(game_id)
    if game is None:
        raise NotFoundError(f"unknown game id {game_id!r}")
    return game


# --------------------------------------------------------------------------
# Lookup tools


def lookup(catalog: Catalog, game_id: str, attribute: str) -> str | int:
    """Return one stored attribute verbatim (rank as integer)."""
    if attribute not in LOOKUP_ATTRIBUTES:
        raise ValidationError(f"unknown attribute {attribute!r}; expected one of {LOOKUP_ATTRIBUTES}")
    game = _require_game(catalog, game_id)
    return getattr(game, attribute)


def get_game_name(catalog: Catalog, game_id: str) -> str:
    return _require_game(catalog, game_id).name


def get_game_genre(catalog: Catalog, game_id: str) -> str:
    return _require_game(catalog, game_id).genre


def get_game_description(catalog: Catalog, game_id: str) -> str:
    return _require_game(catalog, game_id).description


def get_game_rank(catalog: Catalog, game_id: str) -> int:
    return _require_game(catalog, game_id).rank


def is_device_compatible(catalog: Catalog, game_id: str, device: str) -> bool:
    if device not in DEVICES:
        raise ValidationError(f"unknown device {device!r}; expected one of {DEVICES}")
    return device in _require_game(catalog, game_id).devices


# --------------------------------------------------------------------------
# Linking tools


def _normalize(text: str) -> str:
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def _acronym(name_tokens: list[str]) -> str:
    # Initial letters of word tokens; digit tokens kept whole ("Murder
    # Mystery 2" -> "mm2").
    parts = [tok if tok.isdigit() else tok[0] for tok in name_tokens]
    return "".join(parts)


def _edit_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def _edit_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return 1.0 - _edit_distance(a, b) / longest


def get_game_id_from_fuzzy_name(catalog: Catalog, fuzzy: str) -> str | None:
    """Link an approximate game name to an id, or return None.

    Stages, first hit wins, ties broken by lower popularity rank:
      1. normalized exact match,
      2. acronym match,
      3. token subset (all query tokens appear in the name),
      4. normalized edit-distance similarity above the acceptance
         threshold.
    """
    query = _normalize(fuzzy)
    if not query:
        return None
    query_tokens = query.split()
    compact_query = query.replace(" ", "")

    by_rank = sorted(catalog.games.values(), key=lambda g: g.rank)
    names = [(game, _normalize(game.name)) for game in by_rank]

    for game, norm_name in names:
        if query == norm_name:
            return game.id
    for game, norm_name in names:
        if compact_query == _acronym(norm_name.split()):
            return game.id
    for game, norm_name in names:
        if set(query_tokens) <= set(norm_name.split()):
            return game.id

    best: tuple[float, int, str] | None = None
    for game, norm_name in names:
        sim = _edit_similarity(query, norm_name)
        if sim >= FUZZY_ACCEPT_THRESHOLD:
            key = (-sim, game.rank, game.id)
            if best is None or key < best:
                best = key
    return best[2] if best else None


_STEM_SUFFIXES = ("ization", "isation", "ations", "ation", "ings", "ions", "ing", "ion", "ers", "ies", "es", "er", "or", "s")


def _stem(token: str) -> str:
    for suffix in _STEM_SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


def _tokens_share_stem(a: str, b: str) -> bool:
    sa, sb = _stem(a), _stem(b)
    if sa == sb:
        return True
    shorter, longer = sorted((sa, sb), key=len)
    return len(shorter) >= 3 and longer.startswith(shorter)


def fuzzy_genre_to_genres(catalog: Catalog, fuzzy: str) -> list[str]:
    """All vocabulary labels sharing a token stem or substring with the query."""
    query = _normalize(fuzzy)
    if not query:
        return []
    query_tokens = query.split()
    matches = []
    for label in catalog.genre_vocabulary:
        norm_label = _normalize(label)
        if query == norm_label or (len(query) >= 3 and query in norm_label):
            matches.append(label)
            continue
        label_tokens = norm_label.split()
        if any(_tokens_share_stem(q, t) for q in query_tokens for t in label_tokens):
            matches.append(label)
    return matches


# --------------------------------------------------------------------------
# Retrieval tools


def get_search_results(catalog: Catalog, query: str, limit: int = DEFAULT_SEARCH_LIMIT) -> list[str]:
    """BM25 search over name + description for a query of at most 3 words."""
    if not query or not query.strip():
        raise ValidationError("search query must be non-empty")
    if len(query.split()) > 3:
        raise ValidationError(f"search query has more than 3 words: {query!r}")
    return catalog.search_index.search(query, limit)


def get_similar_games_cf(catalog: Catalog, game_id: str, limit: int = DEFAULT_SIMILAR_LIMIT) -> list[str]:
    """Items co-played by users of this game, best first."""
    _require_game(catalog, game_id)
    if limit <= 0:
        return []
    return [other for other, _ in catalog.cf_index.get(game_id, [])][:limit]


def get_similar_games_content(catalog: Catalog, game_id: str, limit: int = DEFAULT_SIMILAR_LIMIT) -> list[str]:
    """Items with the most similar descriptions, by embedding cosine."""
    _require_game(catalog, game_id)
    if limit <= 0:
        return []
    return [other for other, _ in catalog.content_index.get(game_id, [])][:limit]


def get_games_by_age_group(catalog: Catalog, age_group: str, limit: int = DEFAULT_AGE_LIMIT) -> list[str]:
    """Games most played by the labeled age group; global top when unlabeled."""
    if age_group not in AGE_GROUPS:
        raise ValidationError(f"unknown age group {age_group!r}; expected one of {AGE_GROUPS}")
    if limit <= 0:
        return []
    ranked = catalog.age_popularity.get(age_group)
    if not ranked:
        return catalog.top_by_rank[:limit]
    return ranked[:limit]


def get_default_games(catalog: Catalog, n: int, rng_seed: int = 0) -> list[str]:
    """``n`` distinct games sampled uniformly from the top-100, seeded."""
    pool = top_n_by_rank(catalog, min(DEFAULT_GAMES_POOL, len(catalog)))
    if n < 0 or n > len(pool):
        raise ValidationError(f"cannot sample {n} games from a pool of {len(pool)}")
    return random.Random(rng_seed).sample(pool, n)


# --------------------------------------------------------------------------
# Formatting tools


def get_game_info_str(catalog: Catalog, game_id: str) -> str:
    game = _require_game(catalog, game_id)
    return f"{game.name} -- {game.genre}. {game.description}"


def game_ids_to_enum_game_info(catalog: Catalog, ids: list[str]) -> str:
    lines = []
    for position, game_id in enumerate(ids, start=1):
        lines.append(f"{position}. {get_game_info_str(catalog, game_id)}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Registry (drives the plan interpreter and the debug CLI)


@dataclass(frozen=True)
class ToolParam:
    name: str
    kind: str  # "str" | "int" | "ids"
    default: Any = None
    required: bool = True


@dataclass(frozen=True)
class ToolSpec:
    name: str
    func: Callable[..., Any]
    params: tuple[ToolParam, ...]
    result: str  # "items" | "scalar" | "maybe_id" | "labels" | "text"
    section_kind: str | None
    summary: str
    seed_param: str | None = None

    def signature(self) -> str:
        rendered = ", ".join(p.name for p in self.params)
        return f"{self.name}({rendered})"


def _spec(name, func, params, result, section_kind, summary, seed_param=None) -> ToolSpec:
    return ToolSpec(name, func, tuple(params), result, section_kind, summary, seed_param)


TOOL_REGISTRY: dict[str, ToolSpec] = {
    spec.name: spec
    for spec in [
        _spec("get_game_name", get_game_name, [ToolParam("game_id", "str")], "scalar", "liked_lookup",
              "display name of a game"),
        _spec("get_game_genre", get_game_genre, [ToolParam("game_id", "str")], "scalar", "liked_lookup",
              "genre label of a game"),
        _spec("get_game_description", get_game_description, [ToolParam("game_id", "str")], "scalar",
              "liked_lookup", "short description of a game"),
        _spec("get_game_rank", get_game_rank, [ToolParam("game_id", "str")], "scalar", "liked_lookup",
              "popularity rank of a game (1 = most upvoted)"),
        _spec("is_device_compatible", is_device_compatible,
              [ToolParam("game_id", "str"), ToolParam("device", "str")], "scalar", "liked_lookup",
              "whether a game runs on a device"),
        _spec("get_game_id_from_fuzzy_name", get_game_id_from_fuzzy_name, [ToolParam("fuzzy", "str")],
              "maybe_id", None, "link an approximate game name to an id, or nothing"),
        _spec("fuzzy_genre_to_genres", fuzzy_genre_to_genres, [ToolParam("fuzzy", "str")], "labels",
              None, "link an approximate genre to vocabulary labels"),
        _spec("get_search_results", get_search_results,
              [ToolParam("query", "str"), ToolParam("limit", "int", DEFAULT_SEARCH_LIMIT, required=False)],
              "items", "property_search", "keyword search (at most 3 words)"),
        _spec("get_similar_games_cf", get_similar_games_cf,
              [ToolParam("game_id", "str"), ToolParam("limit", "int", DEFAULT_SIMILAR_LIMIT, required=False)],
              "items", "liked_similar_cf", "games co-played by players of a game"),
        _spec("get_similar_games_content", get_similar_games_content,
              [ToolParam("game_id", "str"), ToolParam("limit", "int", DEFAULT_SIMILAR_LIMIT, required=False)],
              "items", "liked_similar_content", "games with similar descriptions"),
        _spec("get_games_by_age_group", get_games_by_age_group,
              [ToolParam("age_group", "str"), ToolParam("limit", "int", DEFAULT_AGE_LIMIT, required=False)],
              "items", "age_games", "games popular with an age group"),
        _spec("get_default_games", get_default_games,
              [ToolParam("n", "int"), ToolParam("rng_seed", "int", 0, required=False)],
              "items", "default_games", "random sample from the top-100 games", seed_param="rng_seed"),
        _spec("get_game_info_str", get_game_info_str, [ToolParam("game_id", "str")], "text",
              "liked_lookup", "one-line formatted game info"),
        _spec("game_ids_to_enum_game_info", game_ids_to_enum_game_info, [ToolParam("ids", "ids")],
              "text", "liked_lookup", "enumerated info lines for a list of ids"),
    ]
}


def run_tool(catalog: Catalog, name: str, args: list[Any]) -> ToolResult:
    """Invoke a registered tool with positional args, normalizing the result."""
    spec = TOOL_REGISTRY.get(name)
    if spec is None:
        raise ValidationError(f"unknown tool {name!r}")
    required = [p for p in spec.params if p.required]
    if len(args) < len(required) or len(args) > len(spec.params):
        raise ValidationError(f"{name} expects {spec.signature()}, got {len(args)} args")
    coerced = []
    for param, value in zip(spec.params, args):
        if param.kind == "int" and not isinstance(value, int):
            try:
                value = int(value)
            except (TypeError, ValueError):
                raise ValidationError(f"{name}: argument {param.name!r} must be an integer")
        if param.kind == "ids" and isinstance(value, str):
            value = [v for v in value.split(",") if v]
        coerced.append(value)
    for param in spec.params[len(args):]:
        coerced.append(param.default)
    value = spec.func(catalog, *coerced)
    if spec.result == "items":
        return ToolResult(tool_name=name, items=tuple(value))
    if spec.result == "labels":
        return ToolResult(tool_name=name, items=(), scalar=", ".join(value))
    if spec.result == "maybe_id":
        return ToolResult(tool_name=name, items=(value,) if value else ())
    return ToolResult(tool_name=name, scalar=value)
