"""Command-line interface: serve, run, eval, ingest-check.

``run`` and ``eval`` are batch clients over the same pipeline the service
exposes: no expert sits in the loop, so the model's rank-1 attributes are
auto-accepted before resolution.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import CaseInput
from .attributes import ShotConfig
from .config import ConfigError, ServiceConfig, build_runtime, load_data_dir
from .evaluation import EvalConfig, load_eval_dataset, run_evaluation
from .idtable import load_idtable, render_error_rate
from .published import PUBLISHED_ACCURACY, PUBLISHED_NOTE
from .session import (
    advance_attribute,
    advance_decompose,
    advance_resolve,
    create_session,
)


def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=["mock", "live"], default="mock")
    parser.add_argument("--fixtures", help="mock fixture file (JSON lines)")
    parser.add_argument("--endpoint", help="live provider chat-completion URL")
    parser.add_argument("--model", help="live provider model name")
    parser.add_argument("--requests-per-minute", type=int, default=None)


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", required=True, help="directory of IDTABLE .csv files")
    parser.add_argument(
        "--table-file", action="append", default=[], help="extra IDTABLE file (repeatable)"
    )


def _config_from_args(args: argparse.Namespace) -> ServiceConfig:
    return ServiceConfig(
        data_dir=args.data_dir,
        host=getattr(args, "host", "127.0.0.1"),
        port=getattr(args, "port", 8000),
        provider=args.provider,
        fixtures_path=args.fixtures,
        endpoint=args.endpoint,
        model=args.model,
        requests_per_minute=args.requests_per_minute,
        journal_dir=getattr(args, "journal_dir", None),
        default_shots=getattr(args, "shots", 5),
        extra_table_files=tuple(args.table_file),
        ui_dir=getattr(args, "ui_dir", None),
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _config_from_args(args)
    try:
        app = create_app(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        store, graph, provider = build_runtime(config)
        case_text = Path(args.case_file).read_text(encoding="utf-8")
        from .idtable import TableId

        case = CaseInput(data_source_text=case_text, table=TableId.parse(args.table))
        session = create_session(case, shots=ShotConfig(args.shots), ablation=args.ablation)
        if args.ablation:
            print("Part A skipped (decomposition ablated)")
        else:
            advance_decompose(session, provider)
            print(f"decomposed: {len(session.reports)} agent reports "
                  f"({session.timings['decompose']:.3f}s)")
        advance_attribute(session, graph, provider)
        print(f"attributed in {session.timings['attribute']:.3f}s; "
              f"rank-1 attributes auto-accepted")
        advance_resolve(session, graph)
    except Exception as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    attrs = session.resolved_attrs
    print(f"selected attributes: PIF {attrs.pif.render()}, CFM "
          f"{'|'.join(sorted(c.value for c in attrs.cfms))}")
    print("ranked matches:")
    for match in session.resolution.ranked_matches:
        print(
            f"  {match.rank}. {match.entry_id}  score {match.score:.3f}  "
            f"error rate {render_error_rate(match.error_rate)}"
        )
    print(f"base HEP: {render_error_rate(session.resolution.base_hep)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        store, graph, provider = build_runtime(config)
        with open(args.dataset, "rb") as fh:
            dataset = load_eval_dataset(fh, store)
        eval_config = EvalConfig(
            shots=ShotConfig(args.shots),
            ablation=args.ablation,
            seed=args.seed,
            n_resamples=args.n_resamples,
        )
        result = run_evaluation(dataset, store, graph, provider, eval_config)
    except Exception as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    print(result.summary.to_text())
    if args.show_reference:
        _print_reference_tables()
    if args.summary_out:
        payload = {
            "summary": result.summary.to_dict(),
            "outcomes": [
                {
                    "case_index": o.case_index,
                    "truth_entry_id": o.truth_entry_id,
                    "hits": o.hits,
                    "resolution_hit": o.resolution_hit,
                    "failed": o.failed,
                    "diagnostics": list(o.diagnostics),
                    "used_shot_ids": list(o.used_shot_ids),
                }
                for o in result.outcomes
            ],
        }
        Path(args.summary_out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"summary written to {args.summary_out}")
    return 0


def _print_reference_tables() -> None:
    print(PUBLISHED_NOTE)
    for table, by_shots in PUBLISHED_ACCURACY.items():
        print(f"  table {table}:")
        for shots, dims in by_shots.items():
            cells = ", ".join(f"{d}={m:.3f}+/-{s:.3f}" for d, (m, s) in dims.items())
            print(f"    {shots}-shot: {cells}")


def cmd_ingest_check(args: argparse.Namespace) -> int:
    paths = [Path(p) for p in args.files]
    if args.data_dir:
        paths.extend(sorted(Path(args.data_dir).glob("*.csv")))
    if not paths:
        print("error: no files given and no --data-dir", file=sys.stderr)
        return 2
    failures = 0
    for path in paths:
        try:
            with open(path, "rb") as fh:
                store = load_idtable(fh)
        except Exception as exc:
            failures += 1
            print(f"FAIL {path}: {exc}")
        else:
            tables = ",".join(t.code for t in store.tables()) or "-"
            print(f"OK   {path}: {len(store)} entries (tables: {tables})")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basehep",
        description="Knowledge-driven base human error probability estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    _add_data_args(p_serve)
    _add_provider_args(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--journal-dir", help="directory for session journals")
    p_serve.add_argument("--shots", type=int, default=5, choices=[0, 1, 3, 5])
    p_serve.add_argument("--ui-dir", help="static frontend directory served at /ui")
    p_serve.set_defaults(func=cmd_serve)

    p_run = sub.add_parser("run", help="run one case end to end, auto-accepting attributes")
    _add_data_args(p_run)
    _add_provider_args(p_run)
    p_run.add_argument("--case-file", required=True, help="file with the case text")
    p_run.add_argument("--table", required=True, help="base-HEP solution type: SF, IAR or TC")
    p_run.add_argument("--shots", type=int, default=5, choices=[0, 1, 3, 5])
    p_run.add_argument("--ablation", action="store_true", help="skip the decomposition stage")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="run the evaluation harness over a dataset")
    _add_data_args(p_eval)
    _add_provider_args(p_eval)
    p_eval.add_argument("--dataset", required=True, help="evaluation dataset file")
    p_eval.add_argument("--shots", type=int, default=5, choices=[0, 1, 3, 5])
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--n-resamples", type=int, default=10_000)
    p_eval.add_argument("--ablation", action="store_true")
    p_eval.add_argument("--summary-out", help="write a machine-readable JSON summary here")
    p_eval.add_argument(
        "--show-reference",
        action="store_true",
        help="also print the published reference accuracies",
    )
    p_eval.set_defaults(func=cmd_eval)

    p_check = sub.add_parser("ingest-check", help="parse and validate IDTABLE files")
    p_check.add_argument("files", nargs="*", help="IDTABLE files to check")
    p_check.add_argument("--data-dir", help="check every .csv in this directory")
    p_check.set_defaults(func=cmd_ingest_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
