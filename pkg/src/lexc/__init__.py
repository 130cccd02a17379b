"""Contracts-as-code toolkit.

Parse a small contract DSL, evaluate it deterministically over exact
rationals, lint it for ambiguity patterns, classify force-majeure
events, and run a shipped corpus of encoded court cases against their
recorded outcomes.
"""

from .corpus import (
    AlignmentReport,
    Assertion,
    CorpusEntry,
    CorpusError,
    EntryResult,
    ManifestError,
    build_report,
    classify_alignment,
    load_corpus,
    run_entry,
)
from .evaluator import (
    EvalError,
    EvalErrorKind,
    EvalFailure,
    NoticeEntry,
    OutcomeLedger,
    PayEntry,
    StatusEntry,
    TerminateEntry,
    apply_rectification,
    day_count,
    eval_expr,
    format_eval_error,
    format_ledger,
    run,
    serialize_money,
    serialize_value,
)
from .force_majeure import (
    EmptyNameError,
    FmParams,
    FmThresholds,
    MissingScoresError,
    ScoredEvent,
    ScoreProvider,
    TableScoreProvider,
    classify,
    filter_catalog,
    handle_event,
    is_custom_event_registered,
    load_catalog,
    register_custom_event,
    table_score_provider,
)
from .linter import (
    ConflictCheck,
    Finding,
    Severity,
    Taxonomy,
    examine_clause_conflicts,
    format_finding,
    lint,
)
from .model import (
    Binary,
    Call,
    Clause,
    Constraint,
    ContractAst,
    Definition,
    EventCatalog,
    If,
    InputDecl,
    Lit,
    Money,
    Name,
    Notice,
    Pay,
    Percent,
    RectifyRule,
    SetStatus,
    Span,
    StructuralError,
    Terminate,
    Type,
    Unary,
    dependency_graph,
    validate,
)
from .parser import ParseError, Scenario, parse, parse_expression, parse_scenario
from .printer import print_canonical
from .report import render_text, write_report

__version__ = "0.1.0"
