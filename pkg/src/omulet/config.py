"""Engine configuration: one key=value file describing a catalog directory.

A catalog directory contains ``engine.cfg`` plus the data files it names.
Relative paths resolve against the config file's directory. Recognized
keys (all optional except ``games``):

    games            = games.jsonl
    interactions     = interactions.jsonl
    embeddings       = embeddings.jsonl
    genres           = genres.txt          # one label per line
    demonstrations   = demonstrations.jsonl
    similar_limit    = 10
    search_limit     = 10
    age_limit        = 10
    default_games_n  = 30
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .catalog import Catalog, CatalogConfig, load_catalog
from .errors import CatalogLoadError, ValidationError
from .intent import IntentPromptSpec, default_prompt_spec, load_prompt_spec
from .policy import PolicyConfig

CONFIG_FILENAME = "engine.cfg"

_INT_KEYS = ("similar_limit", "search_limit", "age_limit", "default_games_n")
_PATH_KEYS = ("games", "interactions", "embeddings", "genres", "demonstrations")


@dataclass(frozen=True)
class EngineConfig:
    root: Path
    games_path: Path
    interactions_path: Path | None = None
    embeddings_path: Path | None = None
    genre_vocabulary: tuple[str, ...] = ()
    demonstrations_path: Path | None = None
    similar_limit: int = 10
    search_limit: int = 10
    age_limit: int = 10
    default_games_n: int = 30

    def policy_config(self, disabled_groups: frozenset[str] = frozenset()) -> PolicyConfig:
        return PolicyConfig(
            similar_limit=self.similar_limit,
            search_limit=self.search_limit,
            age_limit=self.age_limit,
            default_games_n=self.default_games_n,
            disabled_groups=disabled_groups,
        )

    def prompt_spec(self) -> IntentPromptSpec:
        if self.demonstrations_path is not None:
            return load_prompt_spec(self.demonstrations_path)
        return default_prompt_spec()


def _parse_kv(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_engine_config(location: str | Path) -> EngineConfig:
    """Load the config file (or the one inside a catalog directory)."""
    path = Path(location)
    if path.is_dir():
        path = path / CONFIG_FILENAME
    if not path.exists():
        raise CatalogLoadError(f"{path}: config file not found")
    values = _parse_kv(path)
    root = path.parent

    if "games" not in values:
        raise ValidationError(f"{path}: missing required key 'games'")

    def resolve(key: str) -> Path | None:
        if key not in values:
            return None
        return (root / values[key]).resolve()

    unknown = sorted(set(values) - set(_PATH_KEYS) - set(_INT_KEYS))
    if unknown:
        raise ValidationError(f"{path}: unknown keys {unknown}")

    ints = {}
    for key in _INT_KEYS:
        if key in values:
            try:
                ints[key] = int(values[key])
            except ValueError as exc:
                raise ValidationError(f"{path}: {key} must be an integer") from exc

    vocabulary: tuple[str, ...] = ()
    genres_path = resolve("genres")
    if genres_path is not None:
        if not genres_path.exists():
            raise CatalogLoadError(f"{genres_path}: genres file not found")
        vocabulary = tuple(
            line.strip() for line in genres_path.read_text("utf-8").splitlines() if line.strip()
        )

    return EngineConfig(
        root=root,
        games_path=resolve("games"),
        interactions_path=resolve("interactions"),
        embeddings_path=resolve("embeddings"),
        genre_vocabulary=vocabulary,
        demonstrations_path=resolve("demonstrations"),
        **ints,
    )


def load_engine(location: str | Path) -> tuple[Catalog, EngineConfig]:
    """Load config and the fully indexed catalog it describes."""
    config = load_engine_config(location)
    catalog = load_catalog(
        config.games_path,
        config.interactions_path,
        config.embeddings_path,
        CatalogConfig(genre_vocabulary=config.genre_vocabulary),
    )
    return catalog, config
