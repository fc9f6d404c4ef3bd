from __future__ import annotations

import json
from pathlib import Path

import pytest

from omulet.catalog import Catalog, CatalogConfig, load_catalog

SAMPLE_DIR = Path(__file__).resolve().parents[1] / "data" / "sample"

# A compact vocabulary for crafted fixtures (must stay inside the default 21).
FIXTURE_GENRES = (
    "Adventure",
    "Horror",
    "Obby/Platformer",
    "Puzzle",
    "RPG",
    "Roleplay",
    "Sandbox",
    "Simulator/Clicker",
    "Survival",
    "Tycoon/Management Sim",
)


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def game_row(
    game_id: str,
    name: str | None = None,
    genre: str = "Adventure",
    description: str = "",
    upvotes: int = 0,
    devices: list[str] | None = None,
    embedding: list[float] | None = None,
) -> dict:
    row = {
        "id": game_id,
        "name": name or game_id,
        "genre": genre,
        "description": description,
        "upvotes": upvotes,
        "devices": devices if devices is not None else ["DESKTOP"],
    }
    if embedding is not None:
        row["embedding"] = embedding
    return row


def build_catalog(
    tmp_path: Path,
    games: list[dict],
    interactions: list[dict] | None = None,
    embeddings: list[dict] | None = None,
    genre_vocabulary: tuple[str, ...] = (),
) -> Catalog:
    games_path = write_jsonl(tmp_path / "games.jsonl", games)
    interactions_path = None
    if interactions is not None:
        interactions_path = write_jsonl(tmp_path / "interactions.jsonl", interactions)
    embeddings_path = None
    if embeddings is not None:
        embeddings_path = write_jsonl(tmp_path / "embeddings.jsonl", embeddings)
    return load_catalog(
        games_path,
        interactions_path,
        embeddings_path,
        CatalogConfig(genre_vocabulary=genre_vocabulary),
    )


@pytest.fixture(scope="session")
def sample_catalog() -> Catalog:
    return load_catalog(SAMPLE_DIR / "games.jsonl", SAMPLE_DIR / "interactions.jsonl")


def build_policy_catalog(tmp_path: Path) -> Catalog:
    """Crafted catalog: known CF/content neighbors, genres and devices.

    alpha's CF neighbors are beta (strong) then gamma; delta is alpha's top
    content neighbor. beta is Horror and desktop-only, so it is the item
    both kinds of filter should remove. 30 filler games give the default
    branch a full pool.
    """
    games = [
        game_row("alpha", name="Alpha Quest", genre="Adventure", upvotes=100,
                 devices=["DESKTOP", "TABLET"],
                 description="A brave adventure quest through caves and ancient ruins."),
        game_row("beta", name="Beta Scream", genre="Horror", upvotes=90,
                 devices=["DESKTOP"],
                 description="A terrifying horror night full of jumpscares."),
        game_row("gamma", name="Gamma Isles", genre="Adventure", upvotes=80,
                 devices=["DESKTOP", "TABLET"],
                 description="An open adventure across bright islands."),
        game_row("delta", name="Delta Ruins", genre="Puzzle", upvotes=70,
                 devices=["DESKTOP", "TABLET"],
                 description="A brave adventure quest through caves and ancient temples."),
        game_row("epsilon", name="Epsilon Farm", genre="Simulator/Clicker", upvotes=60,
                 devices=["DESKTOP", "TABLET"],
                 description="A cozy farming fun experience with animals."),
    ]
    games += [
        game_row(f"pad{i:02d}", name=f"Padding Game {i:02d}", genre="RPG", upvotes=50 - i,
                 devices=["DESKTOP", "TABLET", "PHONE"],
                 description=f"Filler story number {i} with dragons.")
        for i in range(30)
    ]
    interactions = []
    for u in ("u1", "u2", "u3"):
        interactions += [
            {"user_id": u, "item_id": "alpha"},
            {"user_id": u, "item_id": "beta"},
        ]
    for u in ("u4", "u5"):
        interactions += [
            {"user_id": u, "item_id": "alpha"},
            {"user_id": u, "item_id": "gamma"},
        ]
    for u in ("u6", "u7"):
        interactions.append({"user_id": u, "item_id": "epsilon", "age_group": "9-12"})
    return build_catalog(tmp_path, games, interactions)


@pytest.fixture()
def synthetic_100(tmp_path) -> Catalog:
    """100 games, distinct upvotes, interactions in two play cliques."""
    games = [
        game_row(
            f"s{i:03d}",
            name=f"Synth Game {i:03d}",
            genre=FIXTURE_GENRES[i % len(FIXTURE_GENRES)],
            description=f"A test game number {i} about theme {i % 7}.",
            upvotes=1000 - i,
            devices=["DESKTOP", "PHONE"] if i % 2 else ["DESKTOP", "TABLET"],
        )
        for i in range(100)
    ]
    interactions = []
    for u in range(20):
        for i in range(u % 5, 40, 5):
            interactions.append(
                {"user_id": f"user{u}", "item_id": f"s{i:03d}", "age_group": "9-12" if u < 10 else "18-24"}
            )
    return build_catalog(tmp_path, games, interactions)
