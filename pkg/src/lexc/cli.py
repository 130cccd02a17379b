"""Command-line entry point.

    lexc parse <file>                 check syntax and emit canonical form
    lexc lint <file>                  report ambiguity findings
    lexc run <file> --scenario <file> evaluate and print the outcome ledger
    lexc fm classify ...              classify one event against thresholds
    lexc fm filter ...                list catalog events that classify
    lexc corpus run <dir>             run the case corpus and report alignment

Exit codes: 0 success (and no findings), 1 findings or an alignment
mismatch, 2 parse or validation errors, 3 evaluation errors, 4 I/O
errors. Data goes to stdout, diagnostics to stderr; `--format json`
mirrors each text output field for field. Identical invocations print
identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .corpus import CorpusError, ManifestError, build_report, load_corpus, run_entry
from .evaluator import (
    EvalError,
    NoticeEntry,
    PayEntry,
    StatusEntry,
    TerminateEntry,
    format_ledger,
    run,
    serialize_money,
    serialize_value,
)
from .force_majeure import (
    FmThresholds,
    MissingScoresError,
    classify,
    filter_catalog,
    load_catalog,
    table_score_provider,
)
from .linter import format_finding, lint
from .model import validate
from .parser import ParseError, parse, parse_scenario
from .printer import print_canonical
from .report import render_text, to_dict, write_report

OK = 0
FINDINGS = 1
PARSE_FAILED = 2
EVAL_FAILED = 3
IO_FAILED = 4


class _CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliFailure(IO_FAILED, f"cannot read {path}: {exc}") from None


def _parse_contract(path: str):
    try:
        return parse(_read_text(path))
    except ParseError as exc:
        raise _CliFailure(PARSE_FAILED, f"{path}:{exc.line}:{exc.column}: {exc.message}") from None


def _validated_contract(path: str):
    ast = _parse_contract(path)
    problems = validate(ast)
    if problems:
        detail = "\n".join(f"{path}: {p}" for p in problems)
        raise _CliFailure(PARSE_FAILED, detail)
    return ast


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2))


# --- subcommands -------------------------------------------------------------


def _cmd_parse(args) -> int:
    ast = _validated_contract(args.file)
    if args.format == "json":
        _emit_json(
            {
                "name": ast.name,
                "parties": list(ast.parties),
                "inputs": [{"name": i.name, "type": i.type.value} for i in ast.inputs],
                "definitions": [{"name": d.name, "type": d.type.value} for d in ast.definitions],
                "clauses": [c.name for c in ast.clauses],
                "event_catalogs": [c.name for c in ast.catalogs],
                "rectify_rules": [r.target for r in ast.rectify_rules],
                "constraints": [c.description for c in ast.constraints],
            }
        )
    else:
        sys.stdout.write(print_canonical(ast))
    return OK


def _cmd_lint(args) -> int:
    ast = _parse_contract(args.file)
    findings = lint(ast)
    if args.format == "json":
        _emit_json(
            [
                {
                    "code": f.code,
                    "severity": f.severity.value,
                    "line": f.line,
                    "column": f.column,
                    "message": f.message,
                    "taxonomy": f.taxonomy.value,
                }
                for f in findings
            ]
        )
    else:
        for finding in findings:
            print(format_finding(finding, args.file))
    return FINDINGS if findings else OK


def _ledger_entry_dict(entry) -> dict:
    if isinstance(entry, PayEntry):
        return {
            "type": "PAY",
            "from": entry.from_party,
            "to": entry.to_party,
            "amount": serialize_money(entry.amount),
        }
    if isinstance(entry, StatusEntry):
        return {"type": "STATUS", "name": entry.name, "value": serialize_value(entry.value)}
    if isinstance(entry, TerminateEntry):
        return {"type": "TERMINATE", "reason": entry.reason}
    return {"type": "NOTICE", "text": entry.text}


def _cmd_run(args) -> int:
    ast = _validated_contract(args.file)
    try:
        scenario = parse_scenario(_read_text(args.scenario))
    except ParseError as exc:
        raise _CliFailure(
            PARSE_FAILED, f"{args.scenario}:{exc.line}:{exc.column}: {exc.message}"
        ) from None
    result = run(ast, scenario, max_passes=args.max_passes)
    if isinstance(result, EvalError):
        raise _CliFailure(EVAL_FAILED, f"error: {result}")
    if args.format == "json":
        _emit_json(
            {
                "entries": [_ledger_entry_dict(e) for e in result.entries],
                "fired_clauses": list(result.fired_clauses),
            }
        )
    else:
        sys.stdout.write(format_ledger(result))
    return OK


def _thresholds(args) -> FmThresholds:
    if args.impact_threshold.strip().lower() == "off":
        impact: Optional[int] = None
    else:
        try:
            impact = int(args.impact_threshold)
        except ValueError:
            raise _CliFailure(
                PARSE_FAILED, f"--impact-threshold must be an integer or 'off', got {args.impact_threshold!r}"
            ) from None
    return FmThresholds(similarity_min=args.sim_threshold, impact_min=impact)


def _load_catalog_file(path: str, loader):
    try:
        return loader(path)
    except OSError as exc:
        raise _CliFailure(IO_FAILED, f"cannot read {path}: {exc}") from None
    except ParseError as exc:
        raise _CliFailure(PARSE_FAILED, f"{exc}") from None


def _cmd_fm_classify(args) -> int:
    provider = _load_catalog_file(args.catalog, table_score_provider)
    try:
        scores = provider.score(args.event)
    except MissingScoresError as exc:
        raise _CliFailure(EVAL_FAILED, f"error: {exc}") from None
    included = classify(scores, _thresholds(args))
    if args.format == "json":
        _emit_json(
            {
                "event": scores.name,
                "similarity": scores.similarity,
                "impact": scores.impact,
                "included": included,
            }
        )
    else:
        print("included" if included else "excluded")
    return OK


def _cmd_fm_filter(args) -> int:
    catalog = _load_catalog_file(args.catalog, load_catalog)
    try:
        names = filter_catalog(catalog, _thresholds(args))
    except MissingScoresError as exc:
        raise _CliFailure(EVAL_FAILED, f"error: {exc}") from None
    if args.format == "json":
        _emit_json(names)
    else:
        for name in names:
            print(name)
    return OK


def _cmd_corpus_run(args) -> int:
    if not Path(args.directory).is_dir():
        raise _CliFailure(IO_FAILED, f"error: {args.directory} is not a directory")
    try:
        entries = load_corpus(args.directory)
    except ManifestError as exc:
        raise _CliFailure(IO_FAILED, f"error: {exc}") from None
    except (CorpusError, ParseError) as exc:
        raise _CliFailure(PARSE_FAILED, f"error: {exc}") from None
    report = build_report([run_entry(entry) for entry in entries])
    if args.format == "json":
        _emit_json(to_dict(report))
    else:
        sys.stdout.write(render_text(report))
    if args.report:
        try:
            written = write_report(report, Path(args.report))
        except OSError as exc:
            raise _CliFailure(IO_FAILED, f"cannot write {args.report}: {exc}") from None
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return OK if report.all_agree else FINDINGS


# --- argument wiring ----------------------------------------------------------


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("text", "json"), default="text",
                        help="output format (default: text)")


def _add_threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sim-threshold", type=int, default=7, metavar="N",
                        help="minimum similarity score (default: 7)")
    parser.add_argument("--impact-threshold", default="7", metavar="N|off",
                        help="minimum impact score, or 'off' (default: 7)")
    parser.add_argument("--catalog", required=True, metavar="FILE",
                        help="tab-separated scored event catalog")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexc", description="contract DSL toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse and validate a contract")
    p_parse.add_argument("file")
    _add_format(p_parse)
    p_parse.set_defaults(handler=_cmd_parse)

    p_lint = sub.add_parser("lint", help="report ambiguity findings")
    p_lint.add_argument("file")
    _add_format(p_lint)
    p_lint.set_defaults(handler=_cmd_lint)

    p_run = sub.add_parser("run", help="evaluate a contract against a scenario")
    p_run.add_argument("file")
    p_run.add_argument("--scenario", required=True, metavar="FILE")
    p_run.add_argument("--max-passes", type=int, default=8, metavar="N",
                       help="rectification pass limit (default: 8)")
    _add_format(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_fm = sub.add_parser("fm", help="force-majeure event tools")
    fm_sub = p_fm.add_subparsers(dest="fm_command", required=True)

    p_classify = fm_sub.add_parser("classify", help="classify one event")
    p_classify.add_argument("--event", required=True, metavar="NAME")
    _add_threshold_flags(p_classify)
    _add_format(p_classify)
    p_classify.set_defaults(handler=_cmd_fm_classify)

    p_filter = fm_sub.add_parser("filter", help="list events that classify")
    _add_threshold_flags(p_filter)
    _add_format(p_filter)
    p_filter.set_defaults(handler=_cmd_fm_filter)

    p_corpus = sub.add_parser("corpus", help="case corpus tools")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_command", required=True)
    p_crun = corpus_sub.add_parser("run", help="run every corpus entry")
    p_crun.add_argument("directory")
    p_crun.add_argument("--report", metavar="FILE",
                        help="write a delimited report and figures next to it")
    _add_format(p_crun)
    p_crun.set_defaults(handler=_cmd_corpus_run)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _CliFailure as failure:
        print(str(failure), file=sys.stderr)
        return failure.code


if __name__ == "__main__":
    sys.exit(main())
