"""Static ambiguity linter for contract ASTs.

Six detectors, each mapped to one finding code and one ambiguity family:

    LEX001  catch-all event catalog            phrase ambiguity
    LEX002  circular definitions               extraction ambiguity
    LEX003  possibly unbounded rectification   extraction ambiguity
    LEX004  discretionary deadline override    phrase ambiguity
    LEX005  absent term (unresolved / unused)  absence ambiguity
    LEX006  clauses forcing conflicting facts  extraction ambiguity

Linting never needs a scenario and runs before validation: LEX005 reports
unresolved names that validate() would also reject, plus declared inputs
nothing consults. Detectors only flag what they can demonstrate; LEX006
pairs whose guards it cannot enumerate are skipped with a warning finding
instead of a silent pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Set, Tuple

from .evaluator import EvalFailure, eval_expr, serialize_value
from .model import (
    Binary,
    Call,
    Clause,
    ContractAst,
    Expr,
    If,
    Lit,
    Name,
    Pay,
    SetStatus,
    Span,
    Type,
    Unary,
    dependency_graph,
    expr_names,
    status_names,
)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


class Taxonomy(Enum):
    PHRASE = "PhraseAmbiguity"
    EXTRACT = "ExtractAmbiguity"
    ABSENCE = "AbsenceAmbiguity"


@dataclass(frozen=True)
class Finding:
    code: str
    severity: Severity
    line: int
    column: int
    message: str
    taxonomy: Taxonomy


def format_finding(finding: Finding, filename: str) -> str:
    return f"{finding.code} {filename}:{finding.line}:{finding.column} {finding.message}"


def _named_spans(expr: Expr) -> Iterator[Tuple[str, Span]]:
    if isinstance(expr, Name):
        yield expr.name, expr.span
    elif isinstance(expr, Unary):
        yield from _named_spans(expr.operand)
    elif isinstance(expr, Binary):
        yield from _named_spans(expr.left)
        yield from _named_spans(expr.right)
    elif isinstance(expr, If):
        yield from _named_spans(expr.condition)
        yield from _named_spans(expr.then)
        yield from _named_spans(expr.orelse)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from _named_spans(arg)


def _finding(code: str, severity: Severity, span: Span, message: str, taxonomy: Taxonomy) -> Finding:
    return Finding(code, severity, span.line, span.col, message, taxonomy)


# --- LEX001 ------------------------------------------------------------------


def detect_catch_all(ast: ContractAst) -> List[Finding]:
    """An event catalog ending in `other` defers unnamed events to judgment."""
    return [
        _finding(
            "LEX001",
            Severity.ERROR,
            catalog.span,
            f"event catalog '{catalog.name}' includes a catch-all 'other'; "
            "events outside the listed names are left to interpretation",
            Taxonomy.PHRASE,
        )
        for catalog in ast.catalogs
        if catalog.has_wildcard
    ]


# --- LEX002 ------------------------------------------------------------------


def _strongly_connected(graph: Dict[str, Set[str]]) -> List[List[str]]:
    """Tarjan's algorithm; components in discovery order."""
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack: Set[str] = set()
    stack: List[str] = []
    out: List[List[str]] = []
    counter = itertools.count()

    def visit(node: str) -> None:
        index[node] = low[node] = next(counter)
        stack.append(node)
        on_stack.add(node)
        for succ in graph.get(node, ()):
            if succ not in graph:
                continue
            if succ not in index:
                visit(succ)
                low[node] = min(low[node], low[succ])
            elif succ in on_stack:
                low[node] = min(low[node], index[succ])
        if low[node] == index[node]:
            component = []
            while True:
                top = stack.pop()
                on_stack.discard(top)
                component.append(top)
                if top == node:
                    break
            out.append(component)

    for node in graph:
        if node not in index:
            visit(node)
    return out


def detect_cycles(ast: ContractAst) -> List[Finding]:
    """Definitions whose values depend on themselves can never be computed."""
    graph = {
        name: set(deps)
        for name, deps in dependency_graph(ast).items()
        if name in {d.name for d in ast.definitions}
    }
    findings = []
    spans = {d.name: d.span for d in ast.definitions}
    position = {d.name: i for i, d in enumerate(ast.definitions)}
    for component in _strongly_connected(graph):
        looped = len(component) > 1 or component[0] in graph[component[0]]
        if not looped:
            continue
        members = sorted(component)
        first = min(component, key=position.get)
        findings.append(
            _finding(
                "LEX002",
                Severity.ERROR,
                spans[first],
                f"definitions form a dependency cycle: {', '.join(members)}",
                Taxonomy.EXTRACT,
            )
        )
    return findings


# --- LEX003 ------------------------------------------------------------------


def detect_unbounded_rectification(ast: ContractAst) -> List[Finding]:
    """A rectify rule must provably falsify its own guard in one firing.

    The proof obligation is conservative: every status the guard reads must
    be overwritten with a constant by the body, and the guard must evaluate
    to false over exactly those constants. Anything weaker is flagged.
    """
    findings = []
    for rule in ast.rectify_rules:
        guard_reads = set(expr_names(rule.guard))
        constants = {
            setter.name: setter.value.value
            for setter in rule.body
            if isinstance(setter.value, Lit)
        }
        safe = False
        if guard_reads and guard_reads <= set(constants):
            try:
                safe = eval_expr(rule.guard, {n: constants[n] for n in guard_reads}) is False
            except (EvalFailure, TypeError):
                safe = False
        if not safe:
            findings.append(
                _finding(
                    "LEX003",
                    Severity.ERROR,
                    rule.span,
                    f"rectify '{rule.target}' may fire without bound: "
                    "its body does not demonstrably falsify its guard",
                    Taxonomy.EXTRACT,
                )
            )
    return findings


# --- LEX004 ------------------------------------------------------------------


def detect_discretionary_override(ast: ContractAst) -> List[Finding]:
    """A deadline one party may override is not a fixed deadline."""
    findings = []
    for constraint in ast.constraints:
        if constraint.overridable_by is None:
            continue
        findings.append(
            _finding(
                "LEX004",
                Severity.WARNING,
                constraint.span,
                f'constraint "{constraint.description}" may be overridden by '
                f"{constraint.overridable_by} at discretion",
                Taxonomy.PHRASE,
            )
        )
    return findings


# --- LEX005 ------------------------------------------------------------------


def detect_absence(ast: ContractAst) -> List[Finding]:
    """Names used but never declared, and inputs declared but never used."""
    findings = []
    declared = {i.name for i in ast.inputs} | {d.name for d in ast.definitions}
    statuses = set(status_names(ast))
    parties = set(ast.parties)

    reported: Set[str] = set()

    def check(expr: Expr, scope: Set[str]) -> None:
        for name, span in _named_spans(expr):
            if name not in scope and name not in reported:
                reported.add(name)
                findings.append(
                    _finding(
                        "LEX005",
                        Severity.ERROR,
                        span,
                        f"'{name}' is referenced but never declared",
                        Taxonomy.ABSENCE,
                    )
                )

    referenced: Set[str] = set()
    for definition in ast.definitions:
        check(definition.expr, declared)
        referenced.update(expr_names(definition.expr))
    for clause in ast.clauses:
        check(clause.guard, declared)
        referenced.update(expr_names(clause.guard))
        for outcome in clause.outcomes:
            if isinstance(outcome, Pay):
                check(outcome.amount, declared)
                referenced.update(expr_names(outcome.amount))
                for party in (outcome.from_party, outcome.to_party):
                    if party not in parties and party not in reported:
                        reported.add(party)
                        findings.append(
                            _finding(
                                "LEX005",
                                Severity.ERROR,
                                outcome.span,
                                f"'{party}' is referenced but never declared",
                                Taxonomy.ABSENCE,
                            )
                        )
            elif isinstance(outcome, SetStatus):
                check(outcome.value, declared)
                referenced.update(expr_names(outcome.value))
    for rule in ast.rectify_rules:
        check(rule.guard, statuses)
        for setter in rule.body:
            check(setter.value, statuses)

    for decl in ast.inputs:
        if decl.name not in referenced:
            findings.append(
                _finding(
                    "LEX005",
                    Severity.ERROR,
                    decl.span,
                    f"input '{decl.name}' is declared but no definition or clause consults it",
                    Taxonomy.ABSENCE,
                )
            )
    return findings


# --- LEX006 ------------------------------------------------------------------

_MAX_CONFLICT_INPUTS = 20


@dataclass(frozen=True)
class ConflictCheck:
    """One examined clause pair that pins a status to different constants.

    Either `witness` holds a boolean-input assignment under which both
    guards are true, or `skipped` explains why enumeration was not
    attempted, or neither: the pair was proven mutually exclusive.
    """

    first: str
    second: str
    disputed: Tuple[str, ...]
    witness: Optional[Dict[str, bool]]
    skipped: Optional[str]
    span: Span


def examine_clause_conflicts(ast: ContractAst) -> List[ConflictCheck]:
    """Enumerate every clause pair assigning different constants to a status.

    Enumeration runs only over guards that read nothing but boolean
    inputs, at most 20 of them; anything else is reported as skipped
    rather than silently passed.
    """
    checks = []
    input_types = {i.name: i.type for i in ast.inputs}

    def constant_sets(clause: Clause) -> Dict[str, object]:
        return {
            o.name: o.value.value
            for o in clause.outcomes
            if isinstance(o, SetStatus) and isinstance(o.value, Lit)
        }

    clause_constants = [(clause, constant_sets(clause)) for clause in ast.clauses]
    for (first, first_consts), (second, second_consts) in itertools.combinations(clause_constants, 2):
        disputed = tuple(
            sorted(
                name
                for name in first_consts.keys() & second_consts.keys()
                if first_consts[name] != second_consts[name]
            )
        )
        if not disputed:
            continue

        def check(witness: Optional[Dict[str, bool]], skipped: Optional[str]) -> ConflictCheck:
            return ConflictCheck(first.name, second.name, disputed, witness, skipped, second.span)

        variables = sorted(set(expr_names(first.guard)) | set(expr_names(second.guard)))
        non_boolean = [v for v in variables if input_types.get(v) is not Type.BOOLEAN]
        if non_boolean:
            checks.append(
                check(
                    None,
                    "guards depend on "
                    + ", ".join(f"'{v}'" for v in non_boolean)
                    + ", which are not boolean inputs",
                )
            )
            continue
        if len(variables) > _MAX_CONFLICT_INPUTS:
            checks.append(
                check(None, f"guards read {len(variables)} boolean inputs, more than {_MAX_CONFLICT_INPUTS}")
            )
            continue

        witness = None
        failed = False
        try:
            for values in itertools.product((False, True), repeat=len(variables)):
                env = dict(zip(variables, values))
                if eval_expr(first.guard, env) is True and eval_expr(second.guard, env) is True:
                    witness = env
                    break
        except (EvalFailure, TypeError):
            failed = True
        if failed:
            checks.append(check(None, "guards are not pure boolean tests over the shared inputs"))
        else:
            checks.append(check(witness, None))
    return checks


def detect_clause_conflicts(ast: ContractAst) -> List[Finding]:
    """Two clauses that pin one status to different constants must never
    both fire; prove it by enumerating their boolean inputs or say why not.
    """
    findings = []
    for result in examine_clause_conflicts(ast):
        if result.skipped is not None:
            findings.append(
                _finding(
                    "LEX006",
                    Severity.WARNING,
                    result.span,
                    f"clauses '{result.first}' and '{result.second}' disagree on "
                    f"{', '.join(repr(d) for d in result.disputed)} but the conflict "
                    f"check was skipped: {result.skipped}",
                    Taxonomy.EXTRACT,
                )
            )
            continue
        if result.witness is None:
            continue
        shown = ", ".join(
            f"{name} = {serialize_value(value)}" for name, value in result.witness.items()
        )
        for status in result.disputed:
            findings.append(
                _finding(
                    "LEX006",
                    Severity.ERROR,
                    result.span,
                    f"clauses '{result.first}' and '{result.second}' assign conflicting "
                    f"values to '{status}' and can fire together, e.g. when {shown}",
                    Taxonomy.EXTRACT,
                )
            )
    return findings


# --- entry point --------------------------------------------------------------

_DETECTORS = (
    detect_catch_all,
    detect_cycles,
    detect_unbounded_rectification,
    detect_discretionary_override,
    detect_absence,
    detect_clause_conflicts,
)


def lint(ast: ContractAst) -> List[Finding]:
    """Run every detector and return findings in source order."""
    findings: List[Finding] = []
    for detector in _DETECTORS:
        findings.extend(detector(ast))
    findings.sort(key=lambda f: (f.line, f.column, f.code, f.message))
    return findings
