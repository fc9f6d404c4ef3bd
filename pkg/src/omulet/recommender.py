"""End-to-end recommendation: prompt the model, parse, link, filter.

The model is always asked to enumerate 20 game names; the engine truncates
to the caller's k. Generated names that fail fuzzy linking are counted as
hallucinations and excluded from the final list, so the output never
contains ids outside the catalog. Final ranking is the model's enumeration
order; the engine does no re-ranking.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import llm, plans, policy
from .catalog import Catalog
from .errors import PlanError, TransportError, ValidationError
from .intent import FormattedIntent, IntentPromptSpec, default_prompt_spec, generate_intent
from .policy import PolicyConfig, TraceEntry
from .toolbox import get_game_id_from_fuzzy_name

ENUM_LENGTH = 20

REC_INSTRUCTION = (
    "Given the following request, provide recommendations. "
    "Enumerate 20 Roblox game names (1., 2., ...) in the order of relevance. "
    "Don't say anything else."
)
DIVERSITY_SENTENCE = (
    "The games should be diverse and not too well-known (should be new to the user)."
)
AUGMENT_SENTENCE = (
    "Using the above information along with your own knowledge and reasoning, "
    "provide the best recommendations that fulfill the request."
)

MODES = ("base", "base_div", "omulet_p", "omulet_pllm")
PROMPT_VARIANTS = ("plain", "diverse", "augmented")

_NUMBERED_LINE = re.compile(r"^\s*(\d+)[.)]\s*(.+?)\s*$")


@dataclass
class RecommendationOutcome:
    raw_names: list[str] = field(default_factory=list)
    linked: list[tuple[str, str | None]] = field(default_factory=list)
    items: list[str] = field(default_factory=list)
    factual_fraction: float = 0.0
    intent: FormattedIntent | None = None
    trace: list[TraceEntry] = field(default_factory=list)
    plan_downgraded: bool = False


def build_rec_prompt(raw_request: str, bundle_text: str | None = None,
                     variant: str = "plain") -> str:
    """Assemble the recommendation prompt for one of the three variants."""
    if not raw_request or not raw_request.strip():
        raise ValidationError("raw request must be non-empty")
    if variant not in PROMPT_VARIANTS:
        raise ValidationError(f"unknown prompt variant {variant!r}")
    if variant == "plain":
        return f"{raw_request}\n\n{REC_INSTRUCTION}"
    if variant == "diverse":
        return f"{raw_request}\n\n{REC_INSTRUCTION}\n{DIVERSITY_SENTENCE}"
    if not bundle_text:
        raise ValidationError("augmented variant requires non-empty bundle text")
    return f"{bundle_text}\n\n{raw_request}\n\n{REC_INSTRUCTION}\n{AUGMENT_SENTENCE}"


def parse_rec_list(text: str, max_items: int = ENUM_LENGTH) -> list[str]:
    """Extract numbered names in order, dropping noise, blanks and duplicates."""
    names: list[str] = []
    seen: set[str] = set()
    for line in text.splitlines():
        match = _NUMBERED_LINE.match(line)
        if not match:
            continue
        name = match.group(2).strip().strip("\"'`").strip()
        if not name or name in seen:
            continue
        seen.add(name)
        names.append(name)
        if len(names) >= max_items:
            break
    return names


def link_and_filter(catalog: Catalog, names: list[str]) -> RecommendationOutcome:
    """Link each generated name; unlinkable names count as hallucinated."""
    linked = [(name, get_game_id_from_fuzzy_name(catalog, name)) for name in names]
    items: list[str] = []
    seen: set[str] = set()
    for _, game_id in linked:
        if game_id is None or game_id in seen:
            continue
        seen.add(game_id)
        items.append(game_id)
    factual = (sum(1 for _, g in linked if g is not None) / len(names)) if names else 0.0
    return RecommendationOutcome(
        raw_names=list(names), linked=linked, items=items, factual_fraction=factual
    )


def _complete(backend, prompt: str, stage: str, max_tokens: int = 1024) -> str:
    request = llm.CompletionRequest(
        prompt=prompt, temperature=0.0, max_tokens=max_tokens,
        model_tag=llm.model_tag_of(backend),
    )
    try:
        return llm.complete(backend, request)
    except TransportError as exc:
        raise TransportError(str(exc), stage=stage) from exc


def recommend(
    catalog: Catalog,
    backend,
    raw_request: str,
    mode: str = "omulet_p",
    k: int = 10,
    seed: int = 0,
    policy_config: PolicyConfig | None = None,
    prompt_spec: IntentPromptSpec | None = None,
) -> RecommendationOutcome:
    """Run one request through the selected pipeline mode."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    if k < 1:
        raise ValidationError("k must be >= 1")

    intent: FormattedIntent | None = None
    trace: list[TraceEntry] = []
    downgraded = False

    if mode in ("base", "base_div"):
        variant = "plain" if mode == "base" else "diverse"
        prompt = build_rec_prompt(raw_request, variant=variant)
    else:
        spec = prompt_spec or default_prompt_spec()
        intent = generate_intent(backend, spec, raw_request)
        if mode == "omulet_p":
            bundle = policy.execute_policy(catalog, intent, policy_config, seed)
        else:
            plan_text = _complete(backend, plans.build_plan_prompt(intent, raw_request), "plan")
            try:
                plan = plans.parse_plan(plan_text)
                bundle = plans.execute_plan(catalog, intent, plan, seed)
            except PlanError as exc:
                downgraded = True
                bundle = policy.execute_policy(catalog, intent, policy_config, seed)
                bundle.trace.append(
                    TraceEntry("parse_plan", (), 0, f"plan rejected ({exc}); fixed policy used")
                )
        trace = bundle.trace
        bundle_text = policy.render_bundle(catalog, bundle)
        if bundle_text:
            prompt = build_rec_prompt(raw_request, bundle_text, variant="augmented")
        else:
            # Pathological: everything was filtered away; fall back to plain.
            prompt = build_rec_prompt(raw_request, variant="plain")

    response = _complete(backend, prompt, "recommend")
    names = parse_rec_list(response, ENUM_LENGTH)
    outcome = link_and_filter(catalog, names)
    outcome.items = outcome.items[:k]
    outcome.intent = intent
    outcome.trace = trace
    outcome.plan_downgraded = downgraded
    return outcome
