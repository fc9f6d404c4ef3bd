"""Fixed tool-execution policy: from a formatted intent to an augmentation bundle.

The policy walks the intent in a fixed order. For every liked game it adds
a lookup section plus co-play and content-similarity sections; liked
genres are linked to vocabulary labels and searched; liked properties are
searched only while the bundle is still empty; disliked games get lookup
sections; each demographic age group contributes an age-popularity
section; and an intent that produced nothing at all falls back to a random
sample of 30 top-100 games. Retrieval sections are then filtered against
disliked genres and preferred devices, deduplicated (first occurrence
wins), and the full tool trace is recorded. Tool failures become trace
notes; the policy never aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import toolbox
from .catalog import Catalog
from .errors import NotFoundError, OmuletError
from .intent import FormattedIntent

SECTION_KINDS = (
    "liked_lookup",
    "liked_similar_cf",
    "liked_similar_content",
    "genre_search",
    "property_search",
    "disliked_lookup",
    "age_games",
    "default_games",
)

# Sections subject to the disliked-genre / device filter and to dedup.
RETRIEVAL_KINDS = frozenset(
    {"liked_similar_cf", "liked_similar_content", "genre_search", "property_search", "age_games"}
)

ABLATION_GROUPS = ("lookup", "similar", "search", "age", "filter")

DEFAULT_GAMES_COUNT = 30


@dataclass
class BundleSection:
    kind: str
    header: str
    items: list[str] = field(default_factory=list)
    scalar: str | None = None


@dataclass
class TraceEntry:
    tool: str
    args: tuple
    result_size: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "args": list(self.args),
            "result_size": self.result_size,
            "note": self.note,
        }


@dataclass
class AugmentationBundle:
    sections: list[BundleSection] = field(default_factory=list)
    trace: list[TraceEntry] = field(default_factory=list)

    def item_ids(self) -> list[str]:
        ids = []
        for section in self.sections:
            ids.extend(section.items)
        return ids

    def has_items(self) -> bool:
        return any(section.items for section in self.sections)


@dataclass(frozen=True)
class PolicyConfig:
    similar_limit: int = toolbox.DEFAULT_SIMILAR_LIMIT
    search_limit: int = toolbox.DEFAULT_SEARCH_LIMIT
    age_limit: int = toolbox.DEFAULT_AGE_LIMIT
    default_games_n: int = DEFAULT_GAMES_COUNT
    disabled_groups: frozenset[str] = frozenset()

    def enabled(self, group: str) -> bool:
        return group not in self.disabled_groups


def _truncate_query(text: str, max_words: int = 3) -> str:
    return " ".join(text.split()[:max_words])


def _link_game(catalog: Catalog, bundle: AugmentationBundle, name: str, side: str) -> str | None:
    linked = toolbox.get_game_id_from_fuzzy_name(catalog, name)
    note = "" if linked else f"unlinkable {side} game name {name!r}; skipped"
    bundle.trace.append(
        TraceEntry("get_game_id_from_fuzzy_name", (name,), 1 if linked else 0, note)
    )
    return linked


def _add_section(bundle: AugmentationBundle, kind: str, header: str, items: list[str],
                 tool: str, args: tuple) -> None:
    bundle.sections.append(BundleSection(kind=kind, header=header, items=list(items)))
    bundle.trace.append(TraceEntry(tool, args, len(items)))


def link_disliked_genres(catalog: Catalog, intent: FormattedIntent,
                         bundle: AugmentationBundle | None = None) -> set[str]:
    """Union of vocabulary labels linked from the disliked-genre phrases."""
    labels: set[str] = set()
    for phrase in intent.dislike.genres:
        matched = toolbox.fuzzy_genre_to_genres(catalog, phrase)
        if bundle is not None:
            bundle.trace.append(TraceEntry("fuzzy_genre_to_genres", (phrase,), len(matched)))
        labels.update(matched)
    return labels


def passes_filter(catalog: Catalog, game_id: str, disliked_labels: set[str],
                  preferred_devices: list[str]) -> bool:
    if toolbox.get_game_genre(catalog, game_id) in disliked_labels:
        return False
    return all(
        toolbox.is_device_compatible(catalog, game_id, device) for device in preferred_devices
    )


def apply_filters(catalog: Catalog, bundle: AugmentationBundle, disliked_labels: set[str],
                  preferred_devices: list[str]) -> None:
    """Drop filtered items from retrieval sections only (lookups untouched)."""
    if not disliked_labels and not preferred_devices:
        return
    for section in bundle.sections:
        if section.kind not in RETRIEVAL_KINDS:
            continue
        kept = [
            g for g in section.items
            if passes_filter(catalog, g, disliked_labels, preferred_devices)
        ]
        removed = len(section.items) - len(kept)
        if removed:
            bundle.trace.append(
                TraceEntry("filter", (section.kind, section.header), len(kept),
                           f"removed {removed} item(s)")
            )
        section.items = kept


def dedupe_retrieval_sections(bundle: AugmentationBundle) -> None:
    """Keep only the first occurrence of an id across retrieval sections."""
    seen: set[str] = set()
    for section in bundle.sections:
        if section.kind not in RETRIEVAL_KINDS:
            continue
        kept = []
        for game_id in section.items:
            if game_id in seen:
                continue
            seen.add(game_id)
            kept.append(game_id)
        section.items = kept


def execute_policy(
    catalog: Catalog,
    intent: FormattedIntent,
    config: PolicyConfig | None = None,
    rng_seed: int = 0,
) -> AugmentationBundle:
    """Run the fixed policy over an intent and return the filtered bundle."""
    config = config or PolicyConfig()
    bundle = AugmentationBundle()

    for name in intent.like.game_names:
        game_id = _link_game(catalog, bundle, name, "liked")
        if game_id is None:
            continue
        game_name = toolbox.get_game_name(catalog, game_id)
        if config.enabled("lookup"):
            _add_section(
                bundle, "liked_lookup", "A game the user likes:", [game_id],
                "get_game_info_str", (game_id,),
            )
        if config.enabled("similar"):
            cf = toolbox.get_similar_games_cf(catalog, game_id, config.similar_limit)
            _add_section(
                bundle, "liked_similar_cf", f"Users who played '{game_name}' also played:",
                cf, "get_similar_games_cf", (game_id, config.similar_limit),
            )
            content = toolbox.get_similar_games_content(catalog, game_id, config.similar_limit)
            _add_section(
                bundle, "liked_similar_content",
                f"Games with descriptions similar to '{game_name}':",
                content, "get_similar_games_content", (game_id, config.similar_limit),
            )

    if config.enabled("search"):
        for phrase in intent.like.genres:
            labels = toolbox.fuzzy_genre_to_genres(catalog, phrase)
            bundle.trace.append(TraceEntry("fuzzy_genre_to_genres", (phrase,), len(labels)))
            for label in labels:
                query = _truncate_query(label)
                ids = toolbox.get_search_results(catalog, query, config.search_limit)
                _add_section(
                    bundle, "genre_search", f"Search results for genre '{label}':",
                    ids, "get_search_results", (query, config.search_limit),
                )
        if not bundle.has_items():
            for prop in intent.like.properties:
                query = _truncate_query(prop)
                if not query:
                    continue
                ids = toolbox.get_search_results(catalog, query, config.search_limit)
                _add_section(
                    bundle, "property_search", f"Search results for '{query}':",
                    ids, "get_search_results", (query, config.search_limit),
                )

    for name in intent.dislike.game_names:
        game_id = _link_game(catalog, bundle, name, "disliked")
        if game_id is None:
            continue
        if config.enabled("lookup"):
            _add_section(
                bundle, "disliked_lookup", "A game the user dislikes:", [game_id],
                "get_game_info_str", (game_id,),
            )

    if config.enabled("age"):
        for age_group in intent.demographics.ages:
            ids = toolbox.get_games_by_age_group(catalog, age_group, config.age_limit)
            _add_section(
                bundle, "age_games", f"Games commonly played among ages {age_group}:",
                ids, "get_games_by_age_group", (age_group, config.age_limit),
            )

    if not bundle.has_items():
        n = min(config.default_games_n, min(toolbox.DEFAULT_GAMES_POOL, len(catalog)))
        ids = toolbox.get_default_games(catalog, n, rng_seed)
        _add_section(
            bundle, "default_games", "A random sample of popular games:",
            ids, "get_default_games", (n, rng_seed),
        )

    if config.enabled("filter"):
        disliked_labels = link_disliked_genres(catalog, intent, bundle)
        apply_filters(catalog, bundle, disliked_labels, list(intent.like.devices))

    dedupe_retrieval_sections(bundle)
    return bundle


def render_bundle(catalog: Catalog, bundle: AugmentationBundle) -> str:
    """Render each non-empty section as a header plus enumerated game info."""
    parts = []
    for section in bundle.sections:
        if section.scalar is not None:
            parts.append(f"{section.header}\n{section.scalar}")
        elif section.items:
            try:
                body = toolbox.game_ids_to_enum_game_info(catalog, section.items)
            except NotFoundError as exc:
                raise OmuletError(f"bundle references an id outside the catalog: {exc}") from exc
            parts.append(f"{section.header}\n{body}")
    return "\n\n".join(parts)
