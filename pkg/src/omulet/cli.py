"""Command-line interface.

Subcommands mirror the engine's surfaces: ``tool run`` for single tool
calls, ``policy run`` for bundle inspection, ``recommend`` for one
end-to-end request, ``eval run`` / ``eval ablation`` for the metric
harness, ``dataset build`` for evaluation-file construction, and ``serve``
for the HTTP facade. Output is deterministic given fixed seeds and a
scripted backend.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as dataset_mod
from . import evaluation, policy, toolbox
from .config import load_engine
from .errors import OmuletError, ValidationError
from .intent import intent_from_dict
from .llm import CachingBackend, HttpBackend, ScriptedBackend
from .recommender import MODES, recommend
from .service import create_app

DEFAULT_TRACE_PATH = "omulet-trace.json"


def _build_backend(args) -> object:
    if getattr(args, "scripted", None):
        backend = ScriptedBackend.from_file(args.scripted)
    else:
        backend = HttpBackend.from_env()
    if getattr(args, "llm_cache", None):
        backend = CachingBackend(backend, args.llm_cache)
    return backend


def _print_json(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def cmd_tool_run(args) -> int:
    catalog, _ = load_engine(args.catalog)
    result = toolbox.run_tool(catalog, args.name, list(args.args))
    _print_json(result.to_dict())
    return 0


def cmd_policy_run(args) -> int:
    catalog, engine_cfg = load_engine(args.catalog)
    with open(args.intent, encoding="utf-8") as fh:
        intent = intent_from_dict(json.load(fh))
    bundle = policy.execute_policy(catalog, intent, engine_cfg.policy_config(), args.seed)
    rendered = policy.render_bundle(catalog, bundle)
    print(rendered)
    print("--- trace ---")
    for entry in bundle.trace:
        print(json.dumps(entry.to_dict(), ensure_ascii=False))
    return 0


def cmd_recommend(args) -> int:
    catalog, engine_cfg = load_engine(args.catalog)
    backend = _build_backend(args)
    outcome = recommend(
        catalog,
        backend,
        args.request,
        mode=args.mode,
        k=args.k,
        seed=args.seed,
        policy_config=engine_cfg.policy_config(),
        prompt_spec=engine_cfg.prompt_spec(),
    )
    trace_path = Path(args.trace_out)
    with open(trace_path, "w", encoding="utf-8") as fh:
        json.dump([entry.to_dict() for entry in outcome.trace], fh, ensure_ascii=False, indent=2)
    items = []
    for game_id in outcome.items:
        game = catalog.games[game_id]
        items.append(
            {"id": game.id, "name": game.name, "genre": game.genre, "description": game.description}
        )
    _print_json(
        {
            "items": items,
            "factual_fraction": outcome.factual_fraction,
            "trace_path": str(trace_path),
        }
    )
    return 0


def cmd_eval_run(args) -> int:
    catalog, engine_cfg = load_engine(args.catalog)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    k_values = tuple(int(k) for k in args.k.split(","))
    backend = _build_backend(args) if set(modes) - {"pop"} else None
    requests = evaluation.load_eval_requests(args.requests, catalog)
    report = evaluation.run_eval(
        catalog,
        backend,
        requests,
        modes,
        evaluation.EvalConfig(k_values=k_values, seed=args.seed),
        policy_config=engine_cfg.policy_config(),
        prompt_spec=engine_cfg.prompt_spec(),
    )
    aggregate_path, detail_path = report.write(args.out_dir)
    print(f"aggregate: {aggregate_path}")
    print(f"details:   {detail_path}")
    return 0


def cmd_eval_ablation(args) -> int:
    catalog, engine_cfg = load_engine(args.catalog)
    backend = _build_backend(args)
    requests = evaluation.load_eval_requests(args.requests, catalog)
    groups = list(policy.ABLATION_GROUPS) if args.drop == "all" else [args.drop]
    config = evaluation.EvalConfig(k_values=tuple(int(k) for k in args.k.split(",")), seed=args.seed)
    combined = evaluation.MetricReport()
    for group in groups:
        report = evaluation.run_ablation(
            catalog, backend, requests, group, config, prompt_spec=engine_cfg.prompt_spec()
        )
        combined.rows.extend(report.rows)
        combined.details.extend(report.details)
    aggregate_path, detail_path = combined.write(args.out_dir)
    print(f"aggregate: {aggregate_path}")
    print(f"details:   {detail_path}")
    return 0


def cmd_dataset_build(args) -> int:
    catalog, _ = load_engine(args.catalog)
    records = dataset_mod.load_raw_records(args.raw)
    linked = [dataset_mod.link_record(catalog, r) for r in records]
    surviving = dataset_mod.filter_by_upvotes(linked)
    candidates = {
        request_id: dataset_mod.generate_candidates(catalog, oracle_ids)
        for request_id, oracle_ids in surviving.items()
    }
    annotations = None
    if args.annotations:
        annotations = {}
        with open(args.annotations, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                annotations.setdefault(str(obj["request_id"]), {})[str(obj["item_id"])] = bool(
                    obj["relevant"]
                )
    rows = dataset_mod.export_eval_requests(linked, candidates, args.out, annotations)
    print(f"wrote {rows} request(s) to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    catalog, engine_cfg = load_engine(args.catalog)
    backend = _build_backend(args)
    app = create_app(
        catalog,
        backend,
        feedback_log=args.feedback_log,
        policy_config=engine_cfg.policy_config(),
        prompt_spec=engine_cfg.prompt_spec(),
        ui_origin=args.ui_origin,
        timeout_s=args.timeout,
        seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scripted", help="scripted backend rules file (JSON)")
    parser.add_argument("--llm-cache", dest="llm_cache", help="on-disk completion cache directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omulet")
    sub = parser.add_subparsers(dest="command", required=True)

    tool = sub.add_parser("tool", help="invoke a single tool")
    tool_sub = tool.add_subparsers(dest="tool_command", required=True)
    tool_run = tool_sub.add_parser("run", help="run one tool and print its result")
    tool_run.add_argument("name", choices=sorted(toolbox.TOOL_REGISTRY))
    tool_run.add_argument("args", nargs="*")
    tool_run.add_argument("--catalog", required=True)
    tool_run.set_defaults(func=cmd_tool_run)

    pol = sub.add_parser("policy", help="execute the fixed policy")
    pol_sub = pol.add_subparsers(dest="policy_command", required=True)
    pol_run = pol_sub.add_parser("run", help="print the rendered bundle and trace")
    pol_run.add_argument("--intent", required=True, help="intent JSON file")
    pol_run.add_argument("--catalog", required=True)
    pol_run.add_argument("--seed", type=int, default=0)
    pol_run.set_defaults(func=cmd_policy_run)

    rec = sub.add_parser("recommend", help="run one request end to end")
    rec.add_argument("--request", required=True)
    rec.add_argument("--mode", default="omulet_p", choices=MODES)
    rec.add_argument("--k", type=int, default=10)
    rec.add_argument("--catalog", required=True)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--trace-out", dest="trace_out", default=DEFAULT_TRACE_PATH)
    _add_backend_flags(rec)
    rec.set_defaults(func=cmd_recommend)

    ev = sub.add_parser("eval", help="evaluation harness")
    ev_sub = ev.add_subparsers(dest="eval_command", required=True)
    ev_run = ev_sub.add_parser("run", help="evaluate modes over a request file")
    ev_run.add_argument("--requests", required=True)
    ev_run.add_argument("--catalog", required=True)
    ev_run.add_argument("--modes", default="pop,base,base_div,omulet_p,omulet_pllm")
    ev_run.add_argument("--k", default="5,10")
    ev_run.add_argument("--out-dir", dest="out_dir", default="eval-out")
    ev_run.add_argument("--seed", type=int, default=0)
    _add_backend_flags(ev_run)
    ev_run.set_defaults(func=cmd_eval_run)
    ev_abl = ev_sub.add_parser("ablation", help="evaluate with one tool group disabled")
    ev_abl.add_argument("--requests", required=True)
    ev_abl.add_argument("--catalog", required=True)
    ev_abl.add_argument("--drop", required=True, choices=list(policy.ABLATION_GROUPS) + ["all"])
    ev_abl.add_argument("--k", default="5,10")
    ev_abl.add_argument("--out-dir", dest="out_dir", default="ablation-out")
    ev_abl.add_argument("--seed", type=int, default=0)
    _add_backend_flags(ev_abl)
    ev_abl.set_defaults(func=cmd_eval_ablation)

    ds = sub.add_parser("dataset", help="dataset construction")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)
    ds_build = ds_sub.add_parser("build", help="build an evaluation request file")
    ds_build.add_argument("--raw", required=True)
    ds_build.add_argument("--catalog", required=True)
    ds_build.add_argument("--out", required=True)
    ds_build.add_argument("--annotations")
    ds_build.set_defaults(func=cmd_dataset_build)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--catalog", required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--feedback-log", dest="feedback_log", default="feedback.jsonl")
    srv.add_argument("--ui-origin", dest="ui_origin")
    srv.add_argument("--timeout", type=float, default=30.0)
    srv.add_argument("--seed", type=int, default=0)
    _add_backend_flags(srv)
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OmuletError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
