"""Evaluation harness: baseline runners, metric aggregation, ablations.

A run sweeps mode x k over a request file, executes the pipeline once per
(mode, request) with the full 20-name enumeration, slices per k, and
aggregates the eight metrics into a machine-readable report (one aggregate
CSV plus one JSON-lines per-request detail file). Rows that fail keep the
run alive and are counted. Similar@k skips requests whose recommendation
list is empty; the exclusion count is reported.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import metrics
from .catalog import Catalog, top_n_by_rank
from .errors import ValidationError
from .intent import IntentPromptSpec
from .policy import ABLATION_GROUPS, PolicyConfig
from .recommender import ENUM_LENGTH, MODES, RecommendationOutcome, recommend

log = logging.getLogger(__name__)

EVAL_MODES = ("pop",) + MODES

AGGREGATE_COLUMNS = (
    "mode", "k", "factual", "hit", "precision", "similar", "pop50", "rpop50",
    "entropy", "maxfreq", "n_requests", "n_failed", "similar_excluded",
)


@dataclass(frozen=True)
class EvalRequest:
    request_id: str
    raw_request: str
    ground_truth: tuple[str, ...]
    oracle_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvalConfig:
    k_values: tuple[int, ...] = (5, 10)
    top_pop_n: int = 50
    entropy_log_base: int = 2
    seed: int = 0

    def __post_init__(self):
        for k in self.k_values:
            if not 1 <= k <= ENUM_LENGTH:
                raise ValidationError(f"k must be in 1..{ENUM_LENGTH}, got {k}")


@dataclass
class MetricReport:
    rows: list[dict] = field(default_factory=list)
    details: list[dict] = field(default_factory=list)

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        aggregate_path = out / "aggregate.csv"
        with open(aggregate_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=AGGREGATE_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({c: _cell(row.get(c)) for c in AGGREGATE_COLUMNS})
        detail_path = out / "details.jsonl"
        with open(detail_path, "w", encoding="utf-8") as fh:
            for detail in self.details:
                fh.write(json.dumps(detail, ensure_ascii=False) + "\n")
        return aggregate_path, detail_path


def _cell(value):
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.6f}"
    return value


def load_eval_requests(path: str | Path, catalog: Catalog) -> list[EvalRequest]:
    """Read the JSON-lines request file, validating ids against the catalog."""
    requests = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                request_id = str(obj["request_id"])
                raw_request = str(obj["request"])
                ground_truth = [str(g) for g in obj["ground_truth"]]
                oracles = [str(o["id"]) for o in obj.get("oracles", [])]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad request record ({exc})") from exc
            if not ground_truth:
                raise ValidationError(f"{path}:{lineno}: empty ground truth")
            unknown = [g for g in ground_truth + oracles if g not in catalog]
            if unknown:
                raise ValidationError(f"{path}:{lineno}: unknown item ids {unknown}")
            requests.append(
                EvalRequest(request_id, raw_request, tuple(ground_truth), tuple(oracles))
            )
    if not requests:
        raise ValidationError(f"{path}: no requests")
    return requests


def per_request_seed(request_id: str, seed: int) -> int:
    """Stable per-row seed: digest of the request id xor the global seed."""
    digest = hashlib.blake2b(request_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") ^ seed


def run_baseline_pop(
    catalog: Catalog, requests: list[EvalRequest], k: int, seed: int
) -> dict[str, list[str]]:
    """Pop baseline: k distinct uniform draws from the top-50 per request."""
    if k > metrics.POP_TOP_N:
        raise ValidationError(f"pop baseline draws from the top-{metrics.POP_TOP_N}; k={k} too large")
    pool = top_n_by_rank(catalog, metrics.POP_TOP_N)
    return {
        r.request_id: random.Random(per_request_seed(r.request_id, seed)).sample(pool, k)
        for r in requests
    }


def _pop_outcome(catalog: Catalog, drawn: list[str]) -> RecommendationOutcome:
    names = [catalog.games[g].name for g in drawn]
    return RecommendationOutcome(
        raw_names=names,
        linked=[(name, game_id) for name, game_id in zip(names, drawn)],
        items=list(drawn),
        factual_fraction=1.0,
    )


def _run_mode(
    catalog: Catalog,
    backend,
    requests: list[EvalRequest],
    mode: str,
    config: EvalConfig,
    policy_config: PolicyConfig | None,
    prompt_spec: IntentPromptSpec | None,
) -> tuple[dict[str, RecommendationOutcome], list[str]]:
    outcomes: dict[str, RecommendationOutcome] = {}
    failures: list[str] = []
    max_k = max(config.k_values)
    if mode == "pop":
        drawn = run_baseline_pop(catalog, requests, max_k, config.seed)
        return {rid: _pop_outcome(catalog, items) for rid, items in drawn.items()}, []
    for request in requests:
        try:
            outcomes[request.request_id] = recommend(
                catalog,
                backend,
                request.raw_request,
                mode=mode,
                k=ENUM_LENGTH,
                seed=per_request_seed(request.request_id, config.seed),
                policy_config=policy_config,
                prompt_spec=prompt_spec,
            )
        except Exception as exc:  # noqa: BLE001 - a bad row must not kill the run
            log.warning("request %s failed in mode %s: %s", request.request_id, mode, exc)
            failures.append(request.request_id)
    return outcomes, failures


def _aggregate(
    catalog: Catalog,
    requests: list[EvalRequest],
    outcomes: dict[str, RecommendationOutcome],
    failures: list[str],
    mode: str,
    k: int,
    config: EvalConfig,
    report: MetricReport,
) -> None:
    rows = []
    for request in requests:
        outcome = outcomes.get(request.request_id)
        if outcome is None:
            continue
        items = outcome.items[:k]
        gt = request.ground_truth
        row = {
            "request_id": request.request_id,
            "mode": mode,
            "k": k,
            "factual": metrics.factual_at_k(outcome, k),
            "hit": metrics.hit_at_k(items, gt, k),
            "precision": metrics.precision_at_k(items, gt, k),
            "similar": metrics.similar_at_k(catalog, items, gt, k),
            "pop50": metrics.pop50_at_k(catalog, items, k, config.top_pop_n),
            "gt_pop50": metrics.gt_pop50(catalog, gt, config.top_pop_n),
            "items": items,
        }
        rows.append(row)
        report.details.append(row)

    n = len(rows)
    if n == 0:
        report.rows.append({"mode": mode, "k": k, "n_requests": 0, "n_failed": len(failures)})
        return
    similar_values = [r["similar"] for r in rows if r["similar"] is not None]
    all_lists = [r["items"] for r in rows]
    entropy = metrics.entropy_at_k(all_lists, config.entropy_log_base) if any(all_lists) else None
    if entropy is not None:
        distinct = len({g for items in all_lists for g in items})
        assert 0.0 <= entropy <= math.log(distinct, config.entropy_log_base) + 1e-9, (
            "entropy out of bounds"
        )
    aggregate = {
        "mode": mode,
        "k": k,
        "factual": sum(r["factual"] for r in rows) / n,
        "hit": sum(r["hit"] for r in rows) / n,
        "precision": sum(r["precision"] for r in rows) / n,
        "similar": (sum(similar_values) / len(similar_values)) if similar_values else None,
        "pop50": sum(r["pop50"] for r in rows) / n,
        "rpop50": metrics.rpop50(
            sum(r["pop50"] for r in rows) / n,
            sum(r["gt_pop50"] for r in rows) / n,
        ),
        "entropy": entropy,
        "maxfreq": metrics.maxfreq_at_k(all_lists),
        "n_requests": n,
        "n_failed": len(failures),
        "similar_excluded": n - len(similar_values),
    }
    for rate in ("factual", "hit", "precision", "pop50", "maxfreq"):
        assert 0.0 <= aggregate[rate] <= 1.0, f"{rate} out of range"
    assert aggregate["rpop50"] is None or aggregate["rpop50"] >= 0.0
    report.rows.append(aggregate)


def run_eval(
    catalog: Catalog,
    backend,
    requests: list[EvalRequest],
    modes: list[str],
    config: EvalConfig | None = None,
    policy_config: PolicyConfig | None = None,
    prompt_spec: IntentPromptSpec | None = None,
) -> MetricReport:
    """Evaluate every mode at every k and aggregate the eight metrics."""
    if not requests:
        raise ValidationError("request list must be non-empty")
    for mode in modes:
        if mode not in EVAL_MODES:
            raise ValidationError(f"unknown mode {mode!r}; expected one of {EVAL_MODES}")
    config = config or EvalConfig()
    report = MetricReport()
    for mode in modes:
        outcomes, failures = _run_mode(
            catalog, backend, requests, mode, config, policy_config, prompt_spec
        )
        for k in config.k_values:
            _aggregate(catalog, requests, outcomes, failures, mode, k, config, report)
    return report


def run_ablation(
    catalog: Catalog,
    backend,
    requests: list[EvalRequest],
    drop: str,
    config: EvalConfig | None = None,
    prompt_spec: IntentPromptSpec | None = None,
) -> MetricReport:
    """Evaluate the tool-policy pipeline with one tool group disabled."""
    if drop not in ABLATION_GROUPS:
        raise ValidationError(f"unknown tool group {drop!r}; expected one of {ABLATION_GROUPS}")
    policy_config = PolicyConfig(disabled_groups=frozenset({drop}))
    report = run_eval(
        catalog, backend, requests, ["omulet_p"], config,
        policy_config=policy_config, prompt_spec=prompt_spec,
    )
    for row in report.rows:
        row["mode"] = f"omulet_p-drop_{drop}"
    for detail in report.details:
        detail["mode"] = f"omulet_p-drop_{drop}"
    return report
