"""Canonical text emission for contract ASTs.

`print_canonical(parse(text))` normalizes formatting; parsing the result
yields an AST equal to the original (spans aside, which never compare).
Expressions are emitted with the fewest parentheses that preserve the
parse, using the same precedence table as the parser.
"""

from __future__ import annotations

import datetime
from fractions import Fraction
from typing import List

from .model import (
    Binary,
    Call,
    Clause,
    Constraint,
    ContractAst,
    EventCatalog,
    Expr,
    If,
    Lit,
    Money,
    Name,
    Notice,
    Pay,
    Percent,
    RectifyRule,
    SetStatus,
    Terminate,
    Unary,
    Value,
)

# precedence levels, loosest binding first
_LEVEL_IF = 0
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_NOT = 3
_LEVEL_CMP = 4
_LEVEL_ADD = 5
_LEVEL_MUL = 6
_LEVEL_NEG = 7
_LEVEL_PRIMARY = 8

_BINARY_LEVEL = {
    "or": _LEVEL_OR, "and": _LEVEL_AND,
    "<": _LEVEL_CMP, "<=": _LEVEL_CMP, ">": _LEVEL_CMP, ">=": _LEVEL_CMP,
    "==": _LEVEL_CMP, "!=": _LEVEL_CMP,
    "+": _LEVEL_ADD, "-": _LEVEL_ADD,
    "*": _LEVEL_MUL, "/": _LEVEL_MUL,
}


def format_decimal(value: Fraction) -> str:
    """Exact decimal text for a fraction whose denominator divides 10^k.

    The DSL has no fraction literals, so only such values can round-trip.
    """
    denominator = value.denominator
    places = 0
    while denominator % 2 == 0:
        denominator //= 2
        places += 1
    fives = 0
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    places = max(places, fives)
    if denominator != 1:
        raise ValueError(f"{value} has no exact decimal form")
    if places == 0:
        return str(value.numerator)
    scaled = value * 10**places
    digits = abs(int(scaled))
    sign = "-" if value < 0 else ""
    whole, frac = divmod(digits, 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def format_literal(value: Value) -> str:
    # negative money, percent, and number values are spelled with unary
    # minus in the grammar, so they are not literal-representable
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Money):
        if value.amount < 0:
            raise ValueError("negative money has no literal form")
        return f"{value.currency} {format_decimal(value.amount)}"
    if isinstance(value, Percent):
        if value.value < 0:
            raise ValueError("negative percent has no literal form")
        return f"{format_decimal(value.value * 100)}%"
    if isinstance(value, Fraction):
        if value < 0:
            raise ValueError("negative numbers have no literal form")
        return format_decimal(value)
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"not a literal value: {value!r}")


def format_expr(expr: Expr, min_level: int = _LEVEL_IF) -> str:
    text, level = _format(expr)
    if level < min_level:
        return f"({text})"
    return text


def _format(expr: Expr) -> "tuple[str, int]":
    if isinstance(expr, Lit):
        return format_literal(expr.value), _LEVEL_PRIMARY
    if isinstance(expr, Name):
        return expr.name, _LEVEL_PRIMARY
    if isinstance(expr, Call):
        args = ", ".join(format_expr(a) for a in expr.args)
        return f"{expr.func}({args})", _LEVEL_PRIMARY
    if isinstance(expr, Unary):
        if expr.op == "not":
            return f"not {format_expr(expr.operand, _LEVEL_NOT)}", _LEVEL_NOT
        return f"-{format_expr(expr.operand, _LEVEL_NEG)}", _LEVEL_NEG
    if isinstance(expr, Binary):
        level = _BINARY_LEVEL[expr.op]
        if level == _LEVEL_CMP:
            # comparisons do not chain: both sides at least additive
            left = format_expr(expr.left, _LEVEL_ADD)
            right = format_expr(expr.right, _LEVEL_ADD)
        else:
            left = format_expr(expr.left, level)
            right = format_expr(expr.right, level + 1)
        return f"{left} {expr.op} {right}", level
    if isinstance(expr, If):
        condition = format_expr(expr.condition)
        then = format_expr(expr.then, _LEVEL_OR)
        orelse = format_expr(expr.orelse)
        return f"if {condition} then {then} else {orelse}", _LEVEL_IF
    raise TypeError(f"not an expression: {expr!r}")


def _format_outcome(outcome) -> str:
    if isinstance(outcome, Pay):
        return f"pay {outcome.from_party} -> {outcome.to_party} amount {format_expr(outcome.amount)}"
    if isinstance(outcome, SetStatus):
        return f"set {outcome.name} = {format_expr(outcome.value)}"
    if isinstance(outcome, Terminate):
        return f"terminate {format_literal(outcome.reason)}"
    if isinstance(outcome, Notice):
        return f"notice {format_literal(outcome.text)}"
    raise TypeError(f"not an outcome: {outcome!r}")


def print_canonical(ast: ContractAst) -> str:
    """Emit normalized DSL text for `ast`, ending with a newline."""
    lines: List[str] = [f"contract {format_literal(ast.name)} {{"]
    groups: List[List[str]] = []

    if ast.parties:
        groups.append([f"  party {p};" for p in ast.parties])
    if ast.inputs:
        groups.append([f"  input {i.name}: {i.type.value};" for i in ast.inputs])
    if ast.definitions:
        groups.append([f"  let {d.name}: {d.type.value} = {format_expr(d.expr)};" for d in ast.definitions])

    for clause in ast.clauses:
        block = [f"  clause {clause.name} {{", f"    when {format_expr(clause.guard)} then"]
        block += [f"      {_format_outcome(o)};" for o in clause.outcomes]
        block.append("  }")
        groups.append(block)

    for catalog in ast.catalogs:
        block = [f"  events {catalog.name} {{"]
        block += [f"    {format_literal(e)};" for e in catalog.listed]
        if catalog.has_wildcard:
            block.append("    other;")
        block.append("  }")
        groups.append(block)

    for rule in ast.rectify_rules:
        block = [f"  rectify {rule.target} when {format_expr(rule.guard)} {{"]
        block += [f"    {_format_outcome(s)};" for s in rule.body]
        block.append("  }")
        groups.append(block)

    if ast.constraints:
        block = []
        for c in ast.constraints:
            parts = [f"  constraint {format_literal(c.description)}"]
            if c.deadline_days is not None:
                parts.append(f"deadline {c.deadline_days} days")
            if c.overridable_by is not None:
                parts.append(f"overridable by {c.overridable_by}")
            block.append(" ".join(parts) + ";")
        groups.append(block)

    for index, group in enumerate(groups):
        if index:
            lines.append("")
        lines.extend(group)
    lines.append("}")
    return "\n".join(lines) + "\n"
