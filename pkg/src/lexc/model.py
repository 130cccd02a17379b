"""Core data model for the contract DSL.

Declares the value types (money, percent, exact numbers), the AST node
classes produced by the parser, structural validation, and the definition
dependency graph used by the evaluator and the linter.

All nodes are immutable. Source spans are carried for diagnostics but are
excluded from equality, so two parses of equivalent text compare equal.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Tuple, Union


# ---------------------------------------------------------------------------
# Source positions


@dataclass(frozen=True)
class Span:
    """Half-open byte range plus 1-based line/column of its start and end."""

    start: int
    end: int
    line: int
    col: int
    end_line: int
    end_col: int


# A synthetic span for programmatically built nodes.
NO_SPAN = Span(0, 0, 1, 1, 1, 1)


def _span_field():
    # spans never participate in node equality
    return field(default=NO_SPAN, compare=False)


# ---------------------------------------------------------------------------
# Types and runtime values


class Type(Enum):
    MONEY = "money"
    NUMBER = "number"
    PERCENT = "percent"
    DATE = "date"
    BOOLEAN = "boolean"
    TEXT = "text"


@dataclass(frozen=True)
class Money:
    """An exact amount of a single currency.

    The amount is a Fraction and is never rounded during evaluation;
    rounding happens only when a ledger is serialized.
    """

    currency: str
    amount: Fraction


@dataclass(frozen=True)
class Percent:
    """A percentage stored as its exact scalar value (7% -> 7/100)."""

    value: Fraction


Value = Union[Money, Percent, Fraction, datetime.date, bool, str]


def type_of_value(value: Value) -> Type:
    """Map a runtime value to its declared-type category."""
    # bool first: bool would otherwise be caught by numeric checks
    if isinstance(value, bool):
        return Type.BOOLEAN
    if isinstance(value, Money):
        return Type.MONEY
    if isinstance(value, Percent):
        return Type.PERCENT
    if isinstance(value, Fraction):
        return Type.NUMBER
    if isinstance(value, datetime.date):
        return Type.DATE
    if isinstance(value, str):
        return Type.TEXT
    raise TypeError(f"not a contract value: {value!r}")


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Lit:
    value: Value
    span: Span = _span_field()


@dataclass(frozen=True)
class Name:
    name: str
    span: Span = _span_field()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"
    span: Span = _span_field()


@dataclass(frozen=True)
class Binary:
    op: str  # arithmetic, comparison, "and", "or"
    left: "Expr"
    right: "Expr"
    span: Span = _span_field()


@dataclass(frozen=True)
class If:
    condition: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Span = _span_field()


@dataclass(frozen=True)
class Call:
    func: str  # "min", "max", "days", "compound"
    args: Tuple["Expr", ...]
    span: Span = _span_field()


Expr = Union[Lit, Name, Unary, Binary, If, Call]

# Argument counts for the built-in call forms.
CALL_ARITY = {"min": 2, "max": 2, "days": 2, "compound": 3}


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class InputDecl:
    name: str
    type: Type
    span: Span = _span_field()


@dataclass(frozen=True)
class Definition:
    name: str
    type: Type
    expr: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class Pay:
    from_party: str
    to_party: str
    amount: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class SetStatus:
    name: str
    value: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class Terminate:
    reason: str
    span: Span = _span_field()


@dataclass(frozen=True)
class Notice:
    text: str
    span: Span = _span_field()


Outcome = Union[Pay, SetStatus, Terminate, Notice]


@dataclass(frozen=True)
class Clause:
    name: str
    guard: Expr
    outcomes: Tuple[Outcome, ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class RectifyRule:
    """A correction rule applied to the status store after clause evaluation.

    `target` names what the rule rectifies (for reporting); the guard and
    body may reference only status names.
    """

    target: str
    guard: Expr
    body: Tuple[SetStatus, ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class Constraint:
    description: str
    deadline_days: Optional[int] = None
    overridable_by: Optional[str] = None
    span: Span = _span_field()


@dataclass(frozen=True)
class EventCatalog:
    """A named list of recognized events.

    `has_wildcard` is true when the source listed `other`, i.e. the catalog
    claims to cover unnamed events. `registered_custom` and `scores` are
    populated by the force-majeure operations, not by the parser.
    """

    name: str
    listed: Tuple[str, ...]
    has_wildcard: bool = False
    registered_custom: frozenset = frozenset()
    scores: Optional[Mapping[str, "object"]] = None
    span: Span = _span_field()

    def with_custom(self, name: str) -> "EventCatalog":
        return replace(self, registered_custom=self.registered_custom | {name})

    def all_events(self) -> Tuple[str, ...]:
        return self.listed + tuple(sorted(self.registered_custom - set(self.listed)))


@dataclass(frozen=True)
class ContractAst:
    name: str
    parties: Tuple[str, ...] = ()
    inputs: Tuple[InputDecl, ...] = ()
    definitions: Tuple[Definition, ...] = ()
    clauses: Tuple[Clause, ...] = ()
    catalogs: Tuple[EventCatalog, ...] = ()
    rectify_rules: Tuple[RectifyRule, ...] = ()
    constraints: Tuple[Constraint, ...] = ()
    span: Span = _span_field()


# ---------------------------------------------------------------------------
# Structural validation


class ErrorKind(Enum):
    DUPLICATE_NAME = "DuplicateName"
    UNRESOLVED_REFERENCE = "UnresolvedReference"
    TYPE_MISMATCH = "TypeMismatch"


@dataclass(frozen=True)
class StructuralError:
    kind: ErrorKind
    message: str
    span: Span = _span_field()

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.message}"


def expr_names(expr: Expr) -> Tuple[str, ...]:
    """All identifiers referenced by an expression, in source order."""
    out: list = []

    def walk(e: Expr) -> None:
        if isinstance(e, Name):
            out.append(e.name)
        elif isinstance(e, Unary):
            walk(e.operand)
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, If):
            walk(e.condition)
            walk(e.then)
            walk(e.orelse)
        elif isinstance(e, Call):
            for a in e.args:
                walk(a)

    walk(expr)
    return tuple(out)


def status_names(ast: ContractAst) -> Tuple[str, ...]:
    """Status names assigned anywhere, first-assignment order."""
    seen: dict = {}
    for clause in ast.clauses:
        for outcome in clause.outcomes:
            if isinstance(outcome, SetStatus):
                seen.setdefault(outcome.name, None)
    for rule in ast.rectify_rules:
        for setter in rule.body:
            seen.setdefault(setter.name, None)
    return tuple(seen)


def dependency_graph(ast: ContractAst) -> Mapping[str, frozenset]:
    """Edges from each definition to the inputs/definitions it references.

    Inputs appear as sink nodes with no outgoing edges. Names that resolve
    to neither are omitted; the absence linter reports those separately.
    """
    declared = {d.name for d in ast.definitions} | {i.name for i in ast.inputs}
    graph = {i.name: frozenset() for i in ast.inputs}
    for d in ast.definitions:
        graph[d.name] = frozenset(n for n in expr_names(d.expr) if n in declared)
    return graph


# --- expression type checking ----------------------------------------------

_NUMERICISH = (Type.MONEY, Type.NUMBER, Type.PERCENT)
_COMPARABLE_EQ = set(Type)  # any type supports == / != against itself


class _TypeError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


def _check_multiply(lt: Type, rt: Type, span: Span) -> Type:
    pairs = {
        (Type.MONEY, Type.NUMBER): Type.MONEY,
        (Type.NUMBER, Type.MONEY): Type.MONEY,
        (Type.MONEY, Type.PERCENT): Type.MONEY,
        (Type.PERCENT, Type.MONEY): Type.MONEY,
        (Type.NUMBER, Type.NUMBER): Type.NUMBER,
        (Type.PERCENT, Type.NUMBER): Type.PERCENT,
        (Type.NUMBER, Type.PERCENT): Type.PERCENT,
        (Type.PERCENT, Type.PERCENT): Type.PERCENT,
    }
    result = pairs.get((lt, rt))
    if result is None:
        raise _TypeError(f"cannot multiply {lt.value} by {rt.value}", span)
    return result


def _check_divide(lt: Type, rt: Type, span: Span) -> Type:
    # right operand must be a scalar
    if rt not in (Type.NUMBER, Type.PERCENT):
        raise _TypeError(f"divisor must be number or percent, got {rt.value}", span)
    if lt in (Type.MONEY, Type.NUMBER, Type.PERCENT):
        return lt
    raise _TypeError(f"cannot divide {lt.value}", span)


def infer_type(expr: Expr, env: Mapping[str, Type]) -> Type:
    """Infer the static type of `expr` under `env`, raising on mismatch.

    Kept total over well-formed ASTs: unknown names raise, as do operand
    type combinations the evaluator would reject.
    """
    if isinstance(expr, Lit):
        return type_of_value(expr.value)
    if isinstance(expr, Name):
        if expr.name not in env:
            raise _TypeError(f"unknown name '{expr.name}'", expr.span)
        return env[expr.name]
    if isinstance(expr, Unary):
        t = infer_type(expr.operand, env)
        if expr.op == "not":
            if t is not Type.BOOLEAN:
                raise _TypeError(f"'not' needs boolean, got {t.value}", expr.span)
            return Type.BOOLEAN
        if t in _NUMERICISH:
            return t
        raise _TypeError(f"cannot negate {t.value}", expr.span)
    if isinstance(expr, Binary):
        lt = infer_type(expr.left, env)
        rt = infer_type(expr.right, env)
        op = expr.op
        if op in ("and", "or"):
            if lt is not Type.BOOLEAN or rt is not Type.BOOLEAN:
                raise _TypeError(f"'{op}' needs boolean operands", expr.span)
            return Type.BOOLEAN
        if op in ("==", "!="):
            if lt is not rt:
                raise _TypeError(f"cannot compare {lt.value} with {rt.value}", expr.span)
            return Type.BOOLEAN
        if op in ("<", "<=", ">", ">="):
            ordered = (Type.MONEY, Type.NUMBER, Type.PERCENT, Type.DATE)
            if lt is not rt or lt not in ordered:
                raise _TypeError(f"cannot order {lt.value} against {rt.value}", expr.span)
            return Type.BOOLEAN
        if op == "+" or op == "-":
            if lt is rt and lt in _NUMERICISH:
                return lt
            raise _TypeError(f"cannot apply '{op}' to {lt.value} and {rt.value}", expr.span)
        if op == "*":
            return _check_multiply(lt, rt, expr.span)
        if op == "/":
            return _check_divide(lt, rt, expr.span)
        raise _TypeError(f"unknown operator '{op}'", expr.span)
    if isinstance(expr, If):
        ct = infer_type(expr.condition, env)
        if ct is not Type.BOOLEAN:
            raise _TypeError("if condition must be boolean", expr.span)
        tt = infer_type(expr.then, env)
        et = infer_type(expr.orelse, env)
        if tt is not et:
            raise _TypeError(f"if branches differ: {tt.value} vs {et.value}", expr.span)
        return tt
    if isinstance(expr, Call):
        args = [infer_type(a, env) for a in expr.args]
        if expr.func in ("min", "max"):
            if args[0] is not args[1] or args[0] not in (*_NUMERICISH, Type.DATE):
                raise _TypeError(f"{expr.func} needs two values of one ordered type", expr.span)
            return args[0]
        if expr.func == "days":
            if args != [Type.DATE, Type.DATE]:
                raise _TypeError("days needs two dates", expr.span)
            return Type.NUMBER
        if expr.func == "compound":
            if args[0] not in (Type.MONEY, Type.NUMBER):
                raise _TypeError("compound base must be money or number", expr.span)
            if args[1] is not Type.PERCENT:
                raise _TypeError("compound rate must be a percent", expr.span)
            if args[2] is not Type.NUMBER:
                raise _TypeError("compound period count must be a number", expr.span)
            return args[0]
        raise _TypeError(f"unknown function '{expr.func}'", expr.span)
    raise TypeError(f"not an expression: {expr!r}")


_CURRENCY_JOIN_OPS = {"+", "-", "<", "<=", ">", ">=", "==", "!="}


def _known_currency(expr: Expr, env_cur: Mapping[str, str], report) -> Optional[str]:
    """Static currency of a money-valued expression, when derivable.

    Inputs have unknown currency (None). Where two known but different
    currencies meet in an operation that requires agreement, `report` is
    called; the evaluator still enforces agreement at runtime for the
    unknown cases.
    """
    if isinstance(expr, Lit):
        return expr.value.currency if isinstance(expr.value, Money) else None
    if isinstance(expr, Name):
        return env_cur.get(expr.name)
    if isinstance(expr, Unary):
        return _known_currency(expr.operand, env_cur, report)
    if isinstance(expr, Binary):
        left = _known_currency(expr.left, env_cur, report)
        right = _known_currency(expr.right, env_cur, report)
        if expr.op in _CURRENCY_JOIN_OPS:
            if left and right and left != right:
                report(left, right, expr.span)
            return left or right if expr.op in ("+", "-") else None
        if expr.op == "*":
            return left or right
        if expr.op == "/":
            return left
        return None  # and/or: children already walked
    if isinstance(expr, If):
        _known_currency(expr.condition, env_cur, report)
        then = _known_currency(expr.then, env_cur, report)
        orelse = _known_currency(expr.orelse, env_cur, report)
        if then and orelse and then != orelse:
            report(then, orelse, expr.span)
        return then or orelse
    if isinstance(expr, Call):
        currencies = [_known_currency(a, env_cur, report) for a in expr.args]
        if expr.func in ("min", "max"):
            first, second = currencies
            if first and second and first != second:
                report(first, second, expr.span)
            return first or second
        if expr.func == "compound":
            return currencies[0]
        return None  # days
    return None


def _infer_status_types(ast: ContractAst, env: Mapping[str, Type]) -> "dict[str, Type]":
    """Types of status names from their assignments, clause phase first."""
    out: dict = {}
    setters = [o for c in ast.clauses for o in c.outcomes if isinstance(o, SetStatus)]
    setters += [s for r in ast.rectify_rules for s in r.body]
    for setter in setters:
        try:
            t = infer_type(setter.value, {**env, **out})
        except _TypeError:
            continue  # the per-site pass reports this
        out.setdefault(setter.name, t)
    return out


def validate(ast: ContractAst) -> "list[StructuralError]":
    """Structural check: unique names, resolvable references, sound types.

    Returns an empty list when the contract is well formed. Currency
    agreement is only checked here when both operand currencies are known
    statically; mixed currencies always remain a runtime check.
    """
    errors: list = []

    def err(kind: ErrorKind, message: str, span: Span) -> None:
        errors.append(StructuralError(kind, message, span))

    # name uniqueness across parties, inputs, definitions, and catalogs
    seen: dict = {}
    named = (
        [(p, "party", ast.span) for p in ast.parties]
        + [(i.name, "input", i.span) for i in ast.inputs]
        + [(d.name, "definition", d.span) for d in ast.definitions]
        + [(c.name, "event catalog", c.span) for c in ast.catalogs]
    )
    for name, role, span in named:
        if name in seen:
            err(
                ErrorKind.DUPLICATE_NAME,
                f"'{name}' declared as {role} but already declared as {seen[name]}",
                span,
            )
        else:
            seen[name] = role

    env: dict = {i.name: i.type for i in ast.inputs}
    for d in ast.definitions:
        env[d.name] = d.type
    parties = set(ast.parties)
    statuses = set(status_names(ast))

    def check_refs(expr: Expr, scope: "set[str]", where: str, span: Span) -> bool:
        ok = True
        for n in expr_names(expr):
            if n not in scope:
                err(
                    ErrorKind.UNRESOLVED_REFERENCE,
                    f"'{n}' referenced in {where} is never declared",
                    span,
                )
                ok = False
        return ok

    def check_type(expr: Expr, scope_env: Mapping[str, Type], want: Optional[Type], where: str) -> None:
        try:
            got = infer_type(expr, scope_env)
        except _TypeError as exc:
            err(ErrorKind.TYPE_MISMATCH, f"{where}: {exc.message}", exc.span)
            return
        if want is not None and got is not want:
            err(ErrorKind.TYPE_MISMATCH, f"{where} must be {want.value}, got {got.value}", expr.span)

    value_scope = set(env)
    for d in ast.definitions:
        if check_refs(d.expr, value_scope, f"definition '{d.name}'", d.span):
            check_type(d.expr, env, d.type, f"definition '{d.name}'")

    for clause in ast.clauses:
        if check_refs(clause.guard, value_scope, f"clause '{clause.name}' guard", clause.span):
            check_type(clause.guard, env, Type.BOOLEAN, f"clause '{clause.name}' guard")
        for outcome in clause.outcomes:
            if isinstance(outcome, Pay):
                for party in (outcome.from_party, outcome.to_party):
                    if party not in parties:
                        err(
                            ErrorKind.UNRESOLVED_REFERENCE,
                            f"'{party}' in pay outcome is not a declared party",
                            outcome.span,
                        )
                if check_refs(outcome.amount, value_scope, f"pay in clause '{clause.name}'", outcome.span):
                    check_type(outcome.amount, env, Type.MONEY, f"pay amount in clause '{clause.name}'")
            elif isinstance(outcome, SetStatus):
                if check_refs(outcome.value, value_scope, f"status '{outcome.name}'", outcome.span):
                    check_type(outcome.value, env, None, f"status '{outcome.name}'")

    # static currency agreement: only when both sides are known
    env_cur: dict = {}

    def report_currency(left: str, right: str, span: Span) -> None:
        err(ErrorKind.TYPE_MISMATCH, f"mixes currencies {left} and {right}", span)

    for d in ast.definitions:
        currency = _known_currency(d.expr, env_cur, report_currency)
        if d.type is Type.MONEY and currency:
            env_cur[d.name] = currency
    for clause in ast.clauses:
        _known_currency(clause.guard, env_cur, report_currency)
        for outcome in clause.outcomes:
            if isinstance(outcome, Pay):
                _known_currency(outcome.amount, env_cur, report_currency)
            elif isinstance(outcome, SetStatus):
                _known_currency(outcome.value, env_cur, report_currency)

    status_env = _infer_status_types(ast, env)
    for rule in ast.rectify_rules:
        where = f"rectify '{rule.target}'"
        if check_refs(rule.guard, statuses, f"{where} guard", rule.span):
            check_type(rule.guard, status_env, Type.BOOLEAN, f"{where} guard")
        for setter in rule.body:
            if check_refs(setter.value, statuses, f"{where} body", setter.span):
                check_type(setter.value, status_env, None, f"{where} body")

    for constraint in ast.constraints:
        if constraint.deadline_days is not None and constraint.deadline_days <= 0:
            err(
                ErrorKind.TYPE_MISMATCH,
                f"deadline must be positive, got {constraint.deadline_days}",
                constraint.span,
            )
        if constraint.overridable_by is not None and constraint.overridable_by not in parties:
            err(
                ErrorKind.UNRESOLVED_REFERENCE,
                f"'{constraint.overridable_by}' may override a constraint but is not a declared party",
                constraint.span,
            )

    return errors
