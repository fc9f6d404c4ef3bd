"""Constrained tool-plan DSL: parse and interpret model-written plans.

Instead of executing model-generated code, the engine accepts a small
line-oriented plan language (documented in docs/planspec.md) and interprets
it against the same tool registry the fixed policy uses. Plans are data:
each line is one tool call with literal, intent-field, or bound-name
arguments, plus optional declarative filter flags. Runtime tool errors are
recorded in the trace and the step is skipped, matching the fixed policy's
never-abort stance.

Example::

    gid = get_game_id_from_fuzzy_name(intent.like.game_names[0])
    get_game_info_str(gid)
    get_similar_games_cf(gid, 10)
    get_search_results("obby", 10)
    filter genres devices
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import toolbox
from .catalog import Catalog
from .errors import OmuletError, PlanError
from .intent import FormattedIntent
from .policy import (
    AugmentationBundle,
    BundleSection,
    TraceEntry,
    apply_filters,
    dedupe_retrieval_sections,
    link_disliked_genres,
)

FILTER_FLAGS = ("genres", "devices")

_STEP_RE = re.compile(r"^(?:(?P<bind>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*)?(?P<tool>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<args>.*)\)\s*$")
_INTENT_REF_RE = re.compile(
    r"^intent\.(?P<path>like\.(?:genres|game_names|properties|devices)"
    r"|dislike\.(?:genres|game_names|properties|devices)"
    r"|demographics\.(?:ages|genders))(?:\[(?P<index>\d+)\])?$"
)
_FENCE_RE = re.compile(r"```(?:plan)?\s*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class IntentRef:
    path: str
    index: int | None


@dataclass(frozen=True)
class Binding:
    name: str


PlanArg = Literal | IntentRef | Binding


@dataclass(frozen=True)
class PlanStep:
    tool: str
    args: tuple[PlanArg, ...]
    bind: str | None
    line: int


@dataclass
class ToolPlan:
    steps: list[PlanStep] = field(default_factory=list)
    filters: frozenset[str] = frozenset()


def _split_args(raw: str, line: int) -> list[str]:
    parts = []
    current = []
    in_string = False
    escaped = False
    for ch in raw:
        if in_string:
            current.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            current.append(ch)
        elif ch == ",":
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    if in_string:
        raise PlanError("unterminated string literal", line)
    tail = "".join(current).strip()
    if tail or parts:
        parts.append(tail)
    return [p for p in parts if p != ""] if parts != [""] else []


def _parse_arg(text: str, line: int, bound: set[str]) -> PlanArg:
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise PlanError(f"malformed string literal {text!r}", line)
        return Literal(text[1:-1].replace('\\"', '"').replace("\\\\", "\\"))
    if re.fullmatch(r"-?\d+", text):
        return Literal(int(text))
    match = _INTENT_REF_RE.match(text)
    if match:
        index = match.group("index")
        return IntentRef(match.group("path"), int(index) if index is not None else None)
    if text.startswith("intent."):
        raise PlanError(f"unknown intent field reference {text!r}", line)
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", text):
        if text not in bound:
            raise PlanError(f"reference to unbound name {text!r}", line)
        return Binding(text)
    raise PlanError(f"malformed argument {text!r}", line)


def parse_plan(text: str) -> ToolPlan:
    """Parse a plan from a fenced block (or the whole text when unfenced)."""
    fenced = _FENCE_RE.search(text)
    body = fenced.group(1) if fenced else text

    steps: list[PlanStep] = []
    filters: set[str] = set()
    bound: set[str] = set()
    for lineno, raw_line in enumerate(body.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("filter"):
            flags = line.split()[1:]
            unknown = [f for f in flags if f not in FILTER_FLAGS]
            if unknown:
                raise PlanError(f"unknown filter flag(s) {unknown}", lineno)
            if not flags:
                raise PlanError("filter line needs at least one flag", lineno)
            filters.update(flags)
            continue
        match = _STEP_RE.match(line)
        if not match:
            raise PlanError(f"malformed step {line!r}", lineno)
        tool = match.group("tool")
        spec = toolbox.TOOL_REGISTRY.get(tool)
        if spec is None:
            raise PlanError(f"unknown tool {tool!r}", lineno)
        arg_texts = _split_args(match.group("args"), lineno)
        args = tuple(_parse_arg(t, lineno, bound) for t in arg_texts)
        required = [p for p in spec.params if p.required]
        if len(args) < len(required) or len(args) > len(spec.params):
            raise PlanError(f"{tool} expects {spec.signature()}", lineno)
        bind = match.group("bind")
        if bind:
            bound.add(bind)
        steps.append(PlanStep(tool=tool, args=args, bind=bind, line=lineno))
    return ToolPlan(steps=steps, filters=frozenset(filters))


def _resolve_intent_ref(intent: FormattedIntent, ref: IntentRef):
    section, fieldname = ref.path.split(".")
    values = getattr(getattr(intent, section), fieldname)
    if ref.index is None:
        return list(values)
    if ref.index >= len(values):
        raise OmuletError(f"intent.{ref.path}[{ref.index}] is out of range (has {len(values)})")
    return values[ref.index]


def _section_for(catalog: Catalog, spec: toolbox.ToolSpec, args: list, value) -> BundleSection | None:
    if spec.section_kind is None:
        return None
    if spec.result == "items":
        header = _items_header(catalog, spec.name, args)
        return BundleSection(kind=spec.section_kind, header=header, items=list(value))
    if spec.name == "get_game_info_str":
        return BundleSection(kind=spec.section_kind, header="Game information:", items=[args[0]])
    if spec.name == "game_ids_to_enum_game_info":
        return BundleSection(kind=spec.section_kind, header="Game information:", items=list(args[0]))
    # Scalar lookup: record the answer as text.
    rendered = ", ".join(str(a) for a in args)
    return BundleSection(
        kind=spec.section_kind, header=f"{spec.name}({rendered}):", items=[], scalar=str(value)
    )


def _items_header(catalog: Catalog, tool: str, args: list) -> str:
    if tool == "get_similar_games_cf":
        return f"Users who played '{toolbox.get_game_name(catalog, args[0])}' also played:"
    if tool == "get_similar_games_content":
        return f"Games with descriptions similar to '{toolbox.get_game_name(catalog, args[0])}':"
    if tool == "get_search_results":
        return f"Search results for '{args[0]}':"
    if tool == "get_games_by_age_group":
        return f"Games commonly played among ages {args[0]}:"
    return "A random sample of popular games:"


def execute_plan(
    catalog: Catalog,
    intent: FormattedIntent,
    plan: ToolPlan,
    rng_seed: int = 0,
) -> AugmentationBundle:
    """Interpret a parsed plan against the tool registry."""
    bundle = AugmentationBundle()
    env: dict[str, object] = {}

    for step in plan.steps:
        spec = toolbox.TOOL_REGISTRY[step.tool]
        try:
            args = []
            for arg in step.args:
                if isinstance(arg, Literal):
                    args.append(arg.value)
                elif isinstance(arg, IntentRef):
                    args.append(_resolve_intent_ref(intent, arg))
                else:
                    args.append(env[arg.name])
            for param in spec.params[len(args):]:
                args.append(rng_seed if param.name == spec.seed_param else param.default)
            if any(a is None for a in args[: len([p for p in spec.params if p.required])]):
                raise OmuletError(f"{step.tool}: unresolved argument (linking returned nothing)")
            value = spec.func(catalog, *args)
        except OmuletError as exc:
            bundle.trace.append(TraceEntry(step.tool, tuple(), 0, f"step skipped: {exc}"))
            if step.bind:
                env[step.bind] = None
            continue
        if step.bind:
            env[step.bind] = value
        section = _section_for(catalog, spec, args, value)
        size = len(section.items) if section else (1 if value else 0)
        bundle.trace.append(TraceEntry(step.tool, tuple(str(a) for a in args), size))
        if section is not None:
            bundle.sections.append(section)

    if "genres" in plan.filters or "devices" in plan.filters:
        disliked = link_disliked_genres(catalog, intent, bundle) if "genres" in plan.filters else set()
        devices = list(intent.like.devices) if "devices" in plan.filters else []
        apply_filters(catalog, bundle, disliked, devices)
    dedupe_retrieval_sections(bundle)
    return bundle


PLAN_PROMPT_HEADER = (
    "You control a toolbox for gathering game information before a "
    "recommendation is written. Write a tool plan that collects the most "
    "useful context for the request below. Output only a fenced code block "
    "(```plan ... ```) with one step per line using this grammar:\n"
    "  [name =] tool(arg, ...)      # args: \"string\", integer, intent.<field>[i], or a bound name\n"
    "  filter genres devices        # optional declarative filters\n"
    "Intent fields: intent.like.genres, intent.like.game_names, "
    "intent.like.properties, intent.like.devices, intent.dislike.* "
    "(same four), intent.demographics.ages, intent.demographics.genders.\n"
    "Available tools:"
)


def build_plan_prompt(intent: FormattedIntent, raw_request: str) -> str:
    lines = [PLAN_PROMPT_HEADER]
    for spec in toolbox.TOOL_REGISTRY.values():
        lines.append(f"  {spec.signature()} - {spec.summary}")
    lines.append("")
    lines.append(f"Request: {raw_request}")
    lines.append(f"Intent: {intent.to_json()}")
    lines.append("Plan:")
    return "\n".join(lines)
