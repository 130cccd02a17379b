"""Deterministic contract evaluation over exact rationals.

Evaluation never touches floating point: numbers are `Fraction`, money
amounts are `Fraction` tagged with a currency, and percents are exact
scalars. Rounding happens exactly once, when a ledger is serialized
(half-up to two decimal places).

`run` is the whole pipeline: bind scenario inputs (no defaults, ever),
evaluate definitions in dependency order, evaluate clauses in source
order, then apply rectification rules to a fixpoint. Failures are
returned as `EvalError` values rather than raised, so a batch runner can
record them as results.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .model import (
    Binary,
    Call,
    ContractAst,
    Definition,
    Expr,
    If,
    Lit,
    Money,
    Name,
    NO_SPAN,
    Pay,
    Percent,
    RectifyRule,
    SetStatus,
    Span,
    Terminate,
    Notice,
    Unary,
    Value,
    expr_names,
    type_of_value,
)
from .parser import Scenario
from .printer import format_decimal


class EvalErrorKind(Enum):
    UNBOUND_INPUT = "UnboundInput"
    DIVISION_BY_ZERO = "DivisionByZero"
    CYCLIC_DEFINITION = "CyclicDefinition"
    CURRENCY_MISMATCH = "CurrencyMismatch"
    STATUS_CONFLICT = "StatusConflict"
    NEGATIVE_DAY_COUNT = "NegativeDayCount"


@dataclass(frozen=True)
class EvalError:
    kind: EvalErrorKind
    detail: str
    span: Span = NO_SPAN

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.detail}"


class EvalFailure(Exception):
    """Raised by eval_expr; `run` converts it into a returned EvalError."""

    def __init__(self, error: EvalError):
        super().__init__(str(error))
        self.error = error


def _fail(kind: EvalErrorKind, detail: str, span: Span = NO_SPAN) -> EvalFailure:
    return EvalFailure(EvalError(kind, detail, span))


# ---------------------------------------------------------------------------
# Ledger


@dataclass(frozen=True)
class PayEntry:
    from_party: str
    to_party: str
    amount: Money


@dataclass(frozen=True)
class StatusEntry:
    name: str
    value: Value


@dataclass(frozen=True)
class TerminateEntry:
    reason: str


@dataclass(frozen=True)
class NoticeEntry:
    text: str


LedgerEntry = Union[PayEntry, StatusEntry, TerminateEntry, NoticeEntry]


@dataclass(frozen=True)
class OutcomeLedger:
    """Ordered evaluation results: payments, statuses, notices, termination."""

    entries: Tuple[LedgerEntry, ...] = ()
    fired_clauses: Tuple[str, ...] = ()

    def final_statuses(self) -> Dict[str, Value]:
        return {e.name: e.value for e in self.entries if isinstance(e, StatusEntry)}

    def payments(self) -> List[PayEntry]:
        return [e for e in self.entries if isinstance(e, PayEntry)]

    def terminated(self) -> bool:
        return any(isinstance(e, TerminateEntry) for e in self.entries)


def round_half_up_cents(amount: Fraction) -> int:
    """Exact half-up rounding of a money amount to integer cents."""
    cents = amount * 100
    sign = -1 if cents < 0 else 1
    return sign * math.floor(abs(cents) + Fraction(1, 2))


def serialize_money(money: Money) -> str:
    """`GBP 28499690.96` form: currency code, two decimals, no separators."""
    cents = round_half_up_cents(money.amount)
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{money.currency} {sign}{cents // 100}.{cents % 100:02d}"


def serialize_value(value: Value) -> str:
    """Status-value text used in ledger STATUS lines."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Money):
        return serialize_money(value)
    if isinstance(value, Percent):
        scaled = value.value * 100
        try:
            return format_decimal(scaled) + "%"
        except ValueError:
            return f"{scaled.numerator}/{scaled.denominator}%"
    if isinstance(value, Fraction):
        try:
            return format_decimal(value)
        except ValueError:
            return f"{value.numerator}/{value.denominator}"
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"not a ledger value: {value!r}")


def format_ledger(ledger: OutcomeLedger) -> str:
    """One line per entry; byte-stable across runs."""
    lines: List[str] = []
    for entry in ledger.entries:
        if isinstance(entry, PayEntry):
            lines.append(f"PAY {entry.from_party} {entry.to_party} {serialize_money(entry.amount)}")
        elif isinstance(entry, StatusEntry):
            lines.append(f"STATUS {entry.name} {serialize_value(entry.value)}")
        elif isinstance(entry, TerminateEntry):
            lines.append(f"TERMINATE {entry.reason}")
        elif isinstance(entry, NoticeEntry):
            lines.append(f"NOTICE {entry.text}")
        else:
            raise TypeError(f"not a ledger entry: {entry!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def format_eval_error(error: EvalError) -> str:
    """Single-line error form used where a ledger was expected."""
    return f"ERROR {error.kind.value} {error.detail}\n"


# ---------------------------------------------------------------------------
# Expression evaluation


def day_count(start: datetime.date, end: datetime.date) -> Fraction:
    """Calendar days from start to end; negative when end precedes start."""
    return Fraction((end - start).days)


def _numeric(value: Value) -> Fraction:
    if isinstance(value, Percent):
        return value.value
    if isinstance(value, Fraction):
        return value
    raise TypeError(f"expected a scalar, got {value!r}")


def _same_currency(left: Money, right: Money, op: str, span: Span) -> None:
    if left.currency != right.currency:
        raise _fail(
            EvalErrorKind.CURRENCY_MISMATCH,
            f"{left.currency} and {right.currency} mixed in '{op}'",
            span,
        )


def _add_sub(op: str, left: Value, right: Value, span: Span) -> Value:
    sign = 1 if op == "+" else -1
    if isinstance(left, Money) and isinstance(right, Money):
        _same_currency(left, right, op, span)
        return Money(left.currency, left.amount + sign * right.amount)
    if isinstance(left, Percent) and isinstance(right, Percent):
        return Percent(left.value + sign * right.value)
    if isinstance(left, Fraction) and isinstance(right, Fraction):
        return left + sign * right
    raise TypeError(f"cannot apply '{op}' to {left!r} and {right!r}")


def _multiply(left: Value, right: Value, span: Span) -> Value:
    if isinstance(left, Money) and isinstance(right, Money):
        raise TypeError("cannot multiply money by money")
    if isinstance(left, Money):
        return Money(left.currency, left.amount * _numeric(right))
    if isinstance(right, Money):
        return Money(right.currency, right.amount * _numeric(left))
    if isinstance(left, Percent) or isinstance(right, Percent):
        product = _numeric(left) * _numeric(right)
        return Percent(product)
    return _numeric(left) * _numeric(right)


def _divide(left: Value, right: Value, span: Span) -> Value:
    divisor = _numeric(right)
    if divisor == 0:
        raise _fail(EvalErrorKind.DIVISION_BY_ZERO, "divisor evaluated to zero", span)
    if isinstance(left, Money):
        return Money(left.currency, left.amount / divisor)
    if isinstance(left, Percent):
        return Percent(left.value / divisor)
    return left / divisor


_ORDER_OPS = {"<", "<=", ">", ">="}


def _compare(op: str, left: Value, right: Value, span: Span) -> bool:
    if isinstance(left, Money) and isinstance(right, Money):
        _same_currency(left, right, op, span)
        left_key: object = left.amount
        right_key: object = right.amount
    elif isinstance(left, Percent) and isinstance(right, Percent):
        left_key, right_key = left.value, right.value
    elif type(left) is type(right) or (isinstance(left, Fraction) and isinstance(right, Fraction)):
        left_key, right_key = left, right
    else:
        raise TypeError(f"cannot compare {left!r} with {right!r}")
    if op == "==":
        return left_key == right_key
    if op == "!=":
        return left_key != right_key
    if op in _ORDER_OPS and isinstance(left_key, (bool, str)) and not isinstance(left, datetime.date):
        raise TypeError(f"cannot order {left!r}")
    if op == "<":
        return left_key < right_key
    if op == "<=":
        return left_key <= right_key
    if op == ">":
        return left_key > right_key
    if op == ">=":
        return left_key >= right_key
    raise TypeError(f"unknown comparison '{op}'")


def _as_bool(value: Value, what: str) -> bool:
    if isinstance(value, bool):
        return value
    raise TypeError(f"{what} must be boolean, got {value!r}")


def eval_expr(expr: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate `expr` under `env`. Raises EvalFailure on runtime errors.

    `and`/`or` short-circuit and `if` evaluates only the taken branch, so
    guarded divisions do not fault on the untaken path.
    """
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Name):
        if expr.name not in env:
            raise _fail(EvalErrorKind.UNBOUND_INPUT, expr.name, expr.span)
        return env[expr.name]
    if isinstance(expr, Unary):
        if expr.op == "not":
            return not _as_bool(eval_expr(expr.operand, env), "'not' operand")
        value = eval_expr(expr.operand, env)
        if isinstance(value, Money):
            return Money(value.currency, -value.amount)
        if isinstance(value, Percent):
            return Percent(-value.value)
        if isinstance(value, Fraction):
            return -value
        raise TypeError(f"cannot negate {value!r}")
    if isinstance(expr, Binary):
        op = expr.op
        if op == "and":
            if not _as_bool(eval_expr(expr.left, env), "'and' operand"):
                return False
            return _as_bool(eval_expr(expr.right, env), "'and' operand")
        if op == "or":
            if _as_bool(eval_expr(expr.left, env), "'or' operand"):
                return True
            return _as_bool(eval_expr(expr.right, env), "'or' operand")
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        if op in ("+", "-"):
            return _add_sub(op, left, right, expr.span)
        if op == "*":
            return _multiply(left, right, expr.span)
        if op == "/":
            return _divide(left, right, expr.span)
        return _compare(op, left, right, expr.span)
    if isinstance(expr, If):
        taken = expr.then if _as_bool(eval_expr(expr.condition, env), "if condition") else expr.orelse
        return eval_expr(taken, env)
    if isinstance(expr, Call):
        if expr.func in ("min", "max"):
            left = eval_expr(expr.args[0], env)
            right = eval_expr(expr.args[1], env)
            pick_left = _compare("<=", left, right, expr.span)
            if expr.func == "min":
                return left if pick_left else right
            return right if pick_left else left
        if expr.func == "days":
            start = eval_expr(expr.args[0], env)
            end = eval_expr(expr.args[1], env)
            if not (isinstance(start, datetime.date) and isinstance(end, datetime.date)):
                raise TypeError("days() needs two dates")
            return day_count(start, end)
        if expr.func == "compound":
            base = eval_expr(expr.args[0], env)
            rate = eval_expr(expr.args[1], env)
            periods = eval_expr(expr.args[2], env)
            if not isinstance(rate, Percent):
                raise TypeError("compound() rate must be a percent")
            if not isinstance(periods, Fraction):
                raise TypeError("compound() period count must be a number")
            steps = math.floor(periods)
            if steps < 0:
                raise _fail(
                    EvalErrorKind.NEGATIVE_DAY_COUNT,
                    f"compound period count evaluated to {steps}",
                    expr.span,
                )
            factor = (1 + rate.value) ** steps
            if isinstance(base, Money):
                return Money(base.currency, base.amount * factor)
            if isinstance(base, Fraction):
                return base * factor
            raise TypeError("compound() base must be money or number")
        raise TypeError(f"unknown function '{expr.func}'")
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Contract evaluation


def _definition_order(ast: ContractAst) -> List[Definition]:
    """Definitions in dependency order; declaration order breaks ties.

    Raises EvalFailure(CyclicDefinition) when definitions form a cycle.
    """
    defs = {d.name: d for d in ast.definitions}
    deps: Dict[str, List[str]] = {
        name: [n for n in expr_names(d.expr) if n in defs and n != name]
        + ([name] if name in expr_names(d.expr) else [])
        for name, d in defs.items()
    }
    remaining = dict(deps)
    ordered: List[Definition] = []
    satisfied: set = set()
    while remaining:
        ready = [n for n in remaining if all(d in satisfied for d in remaining[n])]
        if not ready:
            cycle = ", ".join(sorted(remaining))
            raise _fail(
                EvalErrorKind.CYCLIC_DEFINITION,
                f"definitions form a cycle: {cycle}",
                defs[min(remaining)].span,
            )
        # declaration order among ready definitions keeps runs reproducible
        for name in [d.name for d in ast.definitions if d.name in set(ready)]:
            ordered.append(defs[name])
            satisfied.add(name)
            del remaining[name]
    return ordered


def apply_rectification(
    store: Mapping[str, Value],
    rules: Tuple[RectifyRule, ...],
    max_passes: int = 8,
) -> Union[Dict[str, Value], EvalError]:
    """Fire rectify rules over a status store until none fires.

    Each pass applies every rule whose guard holds, in source order; a
    rule whose guard or body references a status not yet in the store is
    skipped for that pass. A quiet pass ends the loop. If every permitted
    pass fired something, the store is still changing and the result is a
    StatusConflict error: the rules do not converge.
    """
    state: Dict[str, Value] = dict(store)
    try:
        for _ in range(max_passes):
            fired = False
            for rule in rules:
                try:
                    guard = eval_expr(rule.guard, state)
                    updates = [(s.name, eval_expr(s.value, state)) for s in rule.body]
                except EvalFailure as exc:
                    if exc.error.kind is EvalErrorKind.UNBOUND_INPUT:
                        continue  # referenced status not set on this run
                    raise
                if _as_bool(guard, f"rectify '{rule.target}' guard"):
                    fired = True
                    for name, value in updates:
                        state[name] = value
            if not fired:
                return state
        return EvalError(
            EvalErrorKind.STATUS_CONFLICT,
            f"rectification did not converge within {max_passes} passes",
            rules[0].span if rules else NO_SPAN,
        )
    except EvalFailure as exc:
        return exc.error


def run(
    ast: ContractAst,
    scenario: Scenario,
    max_passes: int = 8,
) -> Union[OutcomeLedger, EvalError]:
    """Evaluate a validated contract against scenario bindings.

    Every declared input must be bound with the declared type; there are
    no defaults. Bindings for undeclared names are ignored. Returns the
    outcome ledger, or the first EvalError encountered.
    """
    try:
        env: Dict[str, Value] = {}
        for decl in ast.inputs:
            if decl.name not in scenario.bindings:
                raise _fail(EvalErrorKind.UNBOUND_INPUT, decl.name, decl.span)
            value = scenario.bindings[decl.name]
            if type_of_value(value) is not decl.type:
                raise _fail(
                    EvalErrorKind.UNBOUND_INPUT,
                    f"{decl.name} expects {decl.type.value}, scenario binds "
                    f"{type_of_value(value).value}",
                    decl.span,
                )
            env[decl.name] = value

        for definition in _definition_order(ast):
            env[definition.name] = eval_expr(definition.expr, env)

        entries: List[LedgerEntry] = []
        fired: List[str] = []
        status_index: Dict[str, int] = {}
        for clause in ast.clauses:
            if not _as_bool(eval_expr(clause.guard, env), f"clause '{clause.name}' guard"):
                continue
            fired.append(clause.name)
            for outcome in clause.outcomes:
                if isinstance(outcome, Pay):
                    amount = eval_expr(outcome.amount, env)
                    if not isinstance(amount, Money):
                        raise TypeError(f"pay amount in clause '{clause.name}' is not money")
                    entries.append(PayEntry(outcome.from_party, outcome.to_party, amount))
                elif isinstance(outcome, SetStatus):
                    value = eval_expr(outcome.value, env)
                    if outcome.name in status_index:
                        raise _fail(
                            EvalErrorKind.STATUS_CONFLICT,
                            f"status '{outcome.name}' assigned more than once",
                            outcome.span,
                        )
                    status_index[outcome.name] = len(entries)
                    entries.append(StatusEntry(outcome.name, value))
                elif isinstance(outcome, Terminate):
                    entries.append(TerminateEntry(outcome.reason))
                elif isinstance(outcome, Notice):
                    entries.append(NoticeEntry(outcome.text))
                else:
                    raise TypeError(f"not an outcome: {outcome!r}")

        if ast.rectify_rules:
            store = {name: entries[i].value for name, i in status_index.items()}
            rectified = apply_rectification(store, ast.rectify_rules, max_passes)
            if isinstance(rectified, EvalError):
                return rectified
            for name, value in rectified.items():
                if name in status_index:
                    index = status_index[name]
                    if entries[index].value != value:
                        entries[index] = StatusEntry(name, value)
                else:
                    status_index[name] = len(entries)
                    entries.append(StatusEntry(name, value))

        return OutcomeLedger(tuple(entries), tuple(fired))
    except EvalFailure as exc:
        return exc.error
