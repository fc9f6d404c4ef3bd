"""Formatted-intent generation: turn a raw request into structured preferences.

The model is asked to fill a fixed JSON template (liked/disliked genres,
game names, properties and devices, plus user demographics), guided by
five demonstrations shipped as data. Parsing is tolerant: unknown keys are
dropped, missing fields become empty lists, and enum-invalid devices or
ages are discarded with a logged warning. A request that yields no
parseable intent falls back to the empty intent, which downstream policy
execution handles via its default branch.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .catalog import AGE_GROUPS, DEVICES
from .errors import IntentParseError, ValidationError
from . import llm

log = logging.getLogger(__name__)

INTENT_INSTRUCTION = (
    "Given a user's recommendation request, format the user's preference into a "
    "JSON format. Fill in the following template of dict[str, dict[str, list]] "
    "with the relevant information accurately extracted from the user's request:"
)

INTENT_TEMPLATE = """\
{
  "like": {"genres": [], "game_names": [], "properties": [], "devices": []},
  "dislike": {"genres": [], "game_names": [], "properties": [], "devices": []},
  "demographics": {"ages": [], "genders": []}
}

Field notes:
- genres: approximate game genres; they do not need to match official categories.
- game_names: approximate game names; they do not need to match exact titles.
- properties: simple keyphrases describing features or elements of a game.
- devices: a subset of 'DESKTOP', 'PHONE', 'TABLET', 'CONSOLE', 'VR'.
- ages: age group(s) of the user(s), a subset of '0-8', '9-12', '13-17', '18-24', '25-34', '35plus'.
- genders: gender(s) of the user(s), only when explicitly stated."""

REQUIRED_DEMONSTRATIONS = 5

_PREFERENCE_FIELDS = ("genres", "game_names", "properties", "devices")
_DEMOGRAPHIC_FIELDS = ("ages", "genders")


@dataclass
class PreferenceFields:
    genres: list[str] = field(default_factory=list)
    game_names: list[str] = field(default_factory=list)
    properties: list[str] = field(default_factory=list)
    devices: list[str] = field(default_factory=list)


@dataclass
class Demographics:
    ages: list[str] = field(default_factory=list)
    genders: list[str] = field(default_factory=list)


@dataclass
class FormattedIntent:
    like: PreferenceFields = field(default_factory=PreferenceFields)
    dislike: PreferenceFields = field(default_factory=PreferenceFields)
    demographics: Demographics = field(default_factory=Demographics)

    @classmethod
    def empty(cls) -> "FormattedIntent":
        return cls()

    def is_empty(self) -> bool:
        return not any(
            [
                self.like.genres, self.like.game_names, self.like.properties,
                self.like.devices, self.dislike.genres, self.dislike.game_names,
                self.dislike.properties, self.dislike.devices,
                self.demographics.ages, self.demographics.genders,
            ]
        )

    def to_dict(self) -> dict:
        return {
            "like": {f: list(getattr(self.like, f)) for f in _PREFERENCE_FIELDS},
            "dislike": {f: list(getattr(self.dislike, f)) for f in _PREFERENCE_FIELDS},
            "demographics": {f: list(getattr(self.demographics, f)) for f in _DEMOGRAPHIC_FIELDS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def _string_list(raw, where: str) -> list[str]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        log.warning("intent field %s is not a list; ignoring", where)
        return []
    values = []
    for entry in raw:
        if isinstance(entry, (str, int, float)):
            text = str(entry).strip()
            if text:
                values.append(text)
        else:
            log.warning("dropping non-string entry in %s: %r", where, entry)
    return values


def _enum_list(raw, where: str, allowed: tuple[str, ...]) -> list[str]:
    values = []
    for entry in _string_list(raw, where):
        if entry in allowed:
            values.append(entry)
        else:
            log.warning("dropping enum-invalid entry in %s: %r", where, entry)
    return values


def intent_from_dict(data: dict) -> FormattedIntent:
    """Build a validated intent from a parsed JSON object.

    Unknown keys are ignored, missing fields coerce to empty lists, and
    device/age entries outside the enums are dropped with a warning.
    """
    if not isinstance(data, dict):
        raise ValidationError("intent must be a JSON object")

    def preference(side: str) -> PreferenceFields:
        block = data.get(side) or {}
        if not isinstance(block, dict):
            log.warning("intent section %s is not an object; ignoring", side)
            block = {}
        return PreferenceFields(
            genres=_string_list(block.get("genres"), f"{side}.genres"),
            game_names=_string_list(block.get("game_names"), f"{side}.game_names"),
            properties=_string_list(block.get("properties"), f"{side}.properties"),
            devices=_enum_list(block.get("devices"), f"{side}.devices", DEVICES),
        )

    demo_block = data.get("demographics") or {}
    if not isinstance(demo_block, dict):
        demo_block = {}
    demographics = Demographics(
        ages=_enum_list(demo_block.get("ages"), "demographics.ages", AGE_GROUPS),
        genders=_string_list(demo_block.get("genders"), "demographics.genders"),
    )
    return FormattedIntent(like=preference("like"), dislike=preference("dislike"), demographics=demographics)


def _strip_code_fences(text: str) -> str:
    return text.replace("```json", " ").replace("```", " ")


def _balanced_blocks(text: str):
    """Yield candidate balanced {...} slices, tolerating braces in strings."""
    starts = [i for i, ch in enumerate(text) if ch == "{"]
    for start in starts:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]
                    break


def parse_intent(llm_output: str) -> FormattedIntent:
    """Extract and validate the first balanced JSON object in the output."""
    cleaned = _strip_code_fences(llm_output)
    for block in _balanced_blocks(cleaned):
        try:
            data = json.loads(block)
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict):
            return intent_from_dict(data)
    raise IntentParseError("no parseable intent object in model output", raw_output=llm_output)


@dataclass(frozen=True)
class IntentPromptSpec:
    instruction: str
    template: str
    demonstrations: tuple[tuple[str, FormattedIntent], ...]


def load_prompt_spec(path: str | Path) -> IntentPromptSpec:
    """Load (request, intent) demonstrations from a JSON-lines file."""
    demos = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                request = str(obj["request"])
                intent = intent_from_dict(obj["intent"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad demonstration ({exc})") from exc
            demos.append((request, intent))
    return IntentPromptSpec(
        instruction=INTENT_INSTRUCTION,
        template=INTENT_TEMPLATE,
        demonstrations=tuple(demos),
    )


def default_prompt_spec() -> IntentPromptSpec:
    with resources.as_file(resources.files("omulet.data").joinpath("demonstrations.jsonl")) as path:
        return load_prompt_spec(path)


def build_intent_prompt(spec: IntentPromptSpec, raw_request: str) -> str:
    """Instruction + template + the 5 demonstrations + the raw request."""
    if not raw_request or not raw_request.strip():
        raise ValidationError("raw request must be non-empty")
    if len(spec.demonstrations) != REQUIRED_DEMONSTRATIONS:
        raise ValidationError(
            f"exactly {REQUIRED_DEMONSTRATIONS} demonstrations required, got {len(spec.demonstrations)}"
        )
    parts = [spec.instruction, "", spec.template, ""]
    for request, intent in spec.demonstrations:
        parts.append(f"Request: {request}")
        parts.append(f"Intent: {intent.to_json()}")
        parts.append("")
    parts.append(f"Request: {raw_request}")
    parts.append("Intent:")
    return "\n".join(parts)


def generate_intent(backend, spec: IntentPromptSpec, raw_request: str) -> FormattedIntent:
    """Prompt the backend and parse; parse failures yield the empty intent."""
    prompt = build_intent_prompt(spec, raw_request)
    request = llm.CompletionRequest(
        prompt=prompt,
        temperature=0.0,
        max_tokens=512,
        model_tag=llm.model_tag_of(backend),
    )
    output = llm.complete(backend, request)
    try:
        return parse_intent(output)
    except IntentParseError:
        log.warning("intent parse failed for request %r; using empty intent", raw_request[:80])
        return FormattedIntent.empty()
