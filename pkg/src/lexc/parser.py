"""Lexer and recursive-descent parser for the contract DSL.

Grammar, in precedence order (loosest first):

    expr        := if_expr | or_expr
    if_expr     := "if" expr "then" or_expr "else" expr
    or_expr     := and_expr ("or" and_expr)*
    and_expr    := not_expr ("and" not_expr)*
    not_expr    := "not" not_expr | comparison
    comparison  := additive (("<"|"<="|">"|">="|"=="|"!=") additive)?
    additive    := term (("+"|"-") term)*
    term        := unary (("*"|"/") unary)*
    unary       := "-" unary | primary
    primary     := literal | IDENT | "(" expr ")"
                 | ("min"|"max"|"days") "(" expr "," expr ")"
                 | "compound" "(" expr "," expr "," expr ")"
    literal     := MONEY | NUMBER "%" | NUMBER | DATE | STRING | "true" | "false"

Comparisons do not chain. A money literal is a three-letter uppercase
currency code immediately followed by a number (`GBP 26_640_000.00`), so a
party named like a currency code cannot start an expression followed by a
number. Dates are `YYYY-MM-DD` and win over subtraction when a full date
shape is present. Comments run from `#` to end of line.

Declarations:

    contract STRING { decl* }
    decl := "party" IDENT ";"
          | "input" IDENT ":" type ";"
          | "let" IDENT ":" type "=" expr ";"
          | "clause" IDENT "{" "when" expr "then" outcome ";" (outcome ";")* "}"
          | "events" IDENT "{" ((STRING | "other") ";")* "}"
          | "rectify" IDENT "when" expr "{" ("set" IDENT "=" expr ";")* "}"
          | "constraint" STRING ["deadline" NUMBER "days"]
                         ["overridable" "by" IDENT] ";"
    outcome := "pay" IDENT "->" IDENT "amount" expr
             | "set" IDENT "=" expr
             | "terminate" STRING
             | "notice" STRING

Scenario files bind inputs one per line: `name = literal`, with the same
literal forms (a leading "-" is allowed on numbers and money).
"""

from __future__ import annotations

import dataclasses
import datetime
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .model import (
    Binary,
    Call,
    CALL_ARITY,
    Clause,
    Constraint,
    ContractAst,
    Definition,
    EventCatalog,
    Expr,
    If,
    InputDecl,
    Lit,
    Money,
    Name,
    Notice,
    Outcome,
    Pay,
    Percent,
    RectifyRule,
    SetStatus,
    Span,
    Terminate,
    Type,
    Unary,
    Value,
)


class ParseError(Exception):
    """Syntax error with a precise source location.

    `expected` describes what the parser was looking for, `found` the text
    of the offending token.
    """

    def __init__(self, message: str, line: int, column: int, expected: str = "", found: str = ""):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found


KEYWORDS = {
    "contract", "party", "input", "let", "clause", "when", "then", "events",
    "rectify", "set", "constraint", "deadline", "days", "overridable", "by",
    "pay", "amount", "terminate", "notice", "if", "else", "min", "max",
    "compound", "and", "or", "not", "true", "false", "other",
    "money", "number", "percent", "date", "boolean", "text",
}

TYPE_KEYWORDS = {
    "money": Type.MONEY,
    "number": Type.NUMBER,
    "percent": Type.PERCENT,
    "date": Type.DATE,
    "boolean": Type.BOOLEAN,
    "text": Type.TEXT,
}

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}(?!\d)")
_NUMBER_RE = re.compile(r"\d(?:[\d_]*\d)?(?:\.\d(?:[\d_]*\d)?)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CURRENCY_RE = re.compile(r"[A-Z]{3}\Z")

# longest first so "<=" wins over "<"
_PUNCT = ["->", "<=", ">=", "==", "!=", "<", ">", "{", "}", "(", ")",
          ";", ":", ",", "=", "+", "-", "*", "/", "%"]


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, KEYWORD, NUMBER, DATE, STRING, punctuation text, EOF
    text: str
    value: object = None
    start: int = 0
    end: int = 0
    line: int = 1
    col: int = 1


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch == "\n":
            line += 1
            pos += 1
            line_start = pos
            continue
        if ch in " \t\r":
            pos += 1
            continue
        if ch == "#":
            while pos < n and source[pos] != "\n":
                pos += 1
            continue
        col = pos - line_start + 1
        if ch == '"':
            end = pos + 1
            chunks: List[str] = []
            while end < n and source[end] != '"':
                if source[end] == "\n":
                    raise ParseError("unterminated string", line, col, expected='"', found="end of line")
                if source[end] == "\\" and end + 1 < n and source[end + 1] in ('"', "\\"):
                    chunks.append(source[end + 1])
                    end += 2
                else:
                    chunks.append(source[end])
                    end += 1
            if end >= n:
                raise ParseError("unterminated string", line, col, expected='"', found="end of input")
            tokens.append(Token("STRING", source[pos:end + 1], "".join(chunks), pos, end + 1, line, col))
            pos = end + 1
            continue
        if ch.isdigit():
            m = _DATE_RE.match(source, pos)
            if m:
                try:
                    value: object = datetime.date.fromisoformat(m.group())
                except ValueError:
                    raise ParseError(f"invalid date '{m.group()}'", line, col, expected="YYYY-MM-DD", found=m.group())
                tokens.append(Token("DATE", m.group(), value, pos, m.end(), line, col))
                pos = m.end()
                continue
            m = _NUMBER_RE.match(source, pos)
            assert m is not None
            tokens.append(Token("NUMBER", m.group(), Fraction(m.group().replace("_", "")), pos, m.end(), line, col))
            pos = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT_RE.match(source, pos)
            assert m is not None
            word = m.group()
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, word, pos, m.end(), line, col))
            pos = m.end()
            continue
        for punct in _PUNCT:
            if source.startswith(punct, pos):
                tokens.append(Token(punct, punct, punct, pos, pos + len(punct), line, col))
                pos += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col, expected="a token", found=ch)
    tokens.append(Token("EOF", "", None, n, n, line, n - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    # --- token plumbing ---

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, expected: str, tok: Optional[Token] = None) -> "ParseError":
        tok = tok or self.peek()
        found = tok.text if tok.kind != "EOF" else "end of input"
        return ParseError(f"expected {expected}, found {found!r}" if tok.kind != "EOF"
                          else f"expected {expected}, found end of input",
                          tok.line, tok.col, expected=expected, found=found)

    def expect(self, kind: str, expected: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.fail(expected or f"'{kind}'")
        return self.next()

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "KEYWORD" or tok.text != word:
            raise self.fail(f"'{word}'")
        return self.next()

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text in words

    def ident(self, what: str = "an identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.fail(what)
        return self.next()

    def span_from(self, start_tok: Token, end_tok: Optional[Token] = None) -> Span:
        end_tok = end_tok or self.tokens[self.pos - 1]
        return Span(start_tok.start, end_tok.end, start_tok.line, start_tok.col,
                    end_tok.line, end_tok.col + (end_tok.end - end_tok.start))

    # --- expressions ---

    def parse_expr(self) -> Expr:
        if self.at_kw("if"):
            start = self.next()
            condition = self.parse_expr()
            self.expect_kw("then")
            then = self.parse_or()
            self.expect_kw("else")
            orelse = self.parse_expr()
            return If(condition, then, orelse, self.span_from(start))
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at_kw("or"):
            self.next()
            right = self.parse_and()
            left = Binary("or", left, right, self._join(left, right))
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at_kw("and"):
            self.next()
            right = self.parse_not()
            left = Binary("and", left, right, self._join(left, right))
        return left

    def parse_not(self) -> Expr:
        if self.at_kw("not"):
            start = self.next()
            operand = self.parse_not()
            return Unary("not", operand, self._span_to(start, operand))
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        tok = self.peek()
        if tok.kind in ("<", "<=", ">", ">=", "==", "!="):
            self.next()
            right = self.parse_additive()
            return Binary(tok.kind, left, right, self._join(left, right))
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            right = self.parse_term()
            left = Binary(op, left, right, self._join(left, right))
        return left

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            right = self.parse_unary()
            left = Binary(op, left, right, self._join(left, right))
        return left

    def parse_unary(self) -> Expr:
        if self.peek().kind == "-":
            start = self.next()
            operand = self.parse_unary()
            return Unary("-", operand, self._span_to(start, operand))
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            if self.peek().kind == "%":
                pct = self.next()
                return Lit(Percent(tok.value / 100), self.span_from(tok, pct))
            return Lit(tok.value, self.span_from(tok, tok))
        if tok.kind == "DATE":
            self.next()
            return Lit(tok.value, self.span_from(tok, tok))
        if tok.kind == "STRING":
            self.next()
            return Lit(tok.value, self.span_from(tok, tok))
        if tok.kind == "KEYWORD" and tok.text in ("true", "false"):
            self.next()
            return Lit(tok.text == "true", self.span_from(tok, tok))
        if tok.kind == "KEYWORD" and tok.text in CALL_ARITY:
            self.next()
            self.expect("(")
            args = [self.parse_expr()]
            while self.peek().kind == ",":
                self.next()
                args.append(self.parse_expr())
            close = self.expect(")")
            if len(args) != CALL_ARITY[tok.text]:
                raise ParseError(
                    f"{tok.text} takes {CALL_ARITY[tok.text]} arguments, got {len(args)}",
                    tok.line, tok.col, expected=f"{CALL_ARITY[tok.text]} arguments", found=str(len(args)),
                )
            return Call(tok.text, tuple(args), self.span_from(tok, close))
        if tok.kind == "IDENT":
            # currency code + number reads as one money literal
            if _CURRENCY_RE.match(tok.text) and self.peek(1).kind == "NUMBER":
                self.next()
                num = self.next()
                return Lit(Money(tok.text, num.value), self.span_from(tok, num))
            self.next()
            return Name(tok.text, self.span_from(tok, tok))
        if tok.kind == "(":
            self.next()
            inner = self.parse_expr()
            close = self.expect(")")
            # widen the span over the parens so it still slices to valid source
            return dataclasses.replace(inner, span=self.span_from(tok, close))
        raise self.fail("an expression")

    def _join(self, left: Expr, right: Expr) -> Span:
        return Span(left.span.start, right.span.end, left.span.line, left.span.col,
                    right.span.end_line, right.span.end_col)

    def _span_to(self, start_tok: Token, node: Expr) -> Span:
        return Span(start_tok.start, node.span.end, start_tok.line, start_tok.col,
                    node.span.end_line, node.span.end_col)

    # --- declarations ---

    def parse_contract(self) -> ContractAst:
        start = self.expect_kw("contract")
        name = self.expect("STRING", "the contract name")
        self.expect("{")
        parties: List[str] = []
        inputs: List[InputDecl] = []
        definitions: List[Definition] = []
        clauses: List[Clause] = []
        catalogs: List[EventCatalog] = []
        rules: List[RectifyRule] = []
        constraints: List[Constraint] = []
        while self.peek().kind != "}":
            if self.at_kw("party"):
                self.next()
                parties.append(self.ident("a party name").text)
                self.expect(";")
            elif self.at_kw("input"):
                tok = self.next()
                ident = self.ident("an input name")
                self.expect(":")
                inputs.append(InputDecl(ident.text, self.parse_type(), self.span_from(tok)))
                self.expect(";")
            elif self.at_kw("let"):
                tok = self.next()
                ident = self.ident("a definition name")
                self.expect(":")
                decl_type = self.parse_type()
                self.expect("=")
                expr = self.parse_expr()
                self.expect(";")
                definitions.append(Definition(ident.text, decl_type, expr, self.span_from(tok)))
            elif self.at_kw("clause"):
                clauses.append(self.parse_clause())
            elif self.at_kw("events"):
                catalogs.append(self.parse_events())
            elif self.at_kw("rectify"):
                rules.append(self.parse_rectify())
            elif self.at_kw("constraint"):
                constraints.append(self.parse_constraint())
            else:
                raise self.fail("a declaration (party, input, let, clause, events, rectify, or constraint)")
        close = self.expect("}")
        self.expect("EOF", "end of input")
        return ContractAst(
            name=name.value, parties=tuple(parties), inputs=tuple(inputs),
            definitions=tuple(definitions), clauses=tuple(clauses),
            catalogs=tuple(catalogs), rectify_rules=tuple(rules),
            constraints=tuple(constraints), span=self.span_from(start, close),
        )

    def parse_type(self) -> Type:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.text in TYPE_KEYWORDS:
            self.next()
            return TYPE_KEYWORDS[tok.text]
        raise self.fail("a type (money, number, percent, date, boolean, or text)")

    def parse_clause(self) -> Clause:
        start = self.expect_kw("clause")
        name = self.ident("a clause name")
        self.expect("{")
        self.expect_kw("when")
        guard = self.parse_expr()
        self.expect_kw("then")
        outcomes = [self.parse_outcome()]
        self.expect(";")
        while self.peek().kind != "}":
            outcomes.append(self.parse_outcome())
            self.expect(";")
        close = self.expect("}")
        return Clause(name.text, guard, tuple(outcomes), self.span_from(start, close))

    def parse_outcome(self) -> Outcome:
        if self.at_kw("pay"):
            start = self.next()
            from_party = self.ident("the paying party").text
            self.expect("->")
            to_party = self.ident("the receiving party").text
            self.expect_kw("amount")
            amount = self.parse_expr()
            return Pay(from_party, to_party, amount, self.span_from(start))
        if self.at_kw("set"):
            return self.parse_set()
        if self.at_kw("terminate"):
            start = self.next()
            reason = self.expect("STRING", "a termination reason")
            return Terminate(reason.value, self.span_from(start, reason))
        if self.at_kw("notice"):
            start = self.next()
            text = self.expect("STRING", "a notice text")
            return Notice(text.value, self.span_from(start, text))
        raise self.fail("an outcome (pay, set, terminate, or notice)")

    def parse_set(self) -> SetStatus:
        start = self.expect_kw("set")
        name = self.ident("a status name")
        self.expect("=")
        value = self.parse_expr()
        return SetStatus(name.text, value, self.span_from(start))

    def parse_events(self) -> EventCatalog:
        start = self.expect_kw("events")
        name = self.ident("a catalog name")
        self.expect("{")
        listed: List[str] = []
        has_wildcard = False
        while self.peek().kind != "}":
            tok = self.peek()
            if tok.kind == "STRING":
                self.next()
                listed.append(tok.value)
            elif self.at_kw("other"):
                self.next()
                has_wildcard = True
            else:
                raise self.fail("an event name string or 'other'")
            self.expect(";")
        close = self.expect("}")
        return EventCatalog(name.text, tuple(listed), has_wildcard, span=self.span_from(start, close))

    def parse_rectify(self) -> RectifyRule:
        start = self.expect_kw("rectify")
        target = self.ident("a rectification target")
        self.expect_kw("when")
        guard = self.parse_expr()
        self.expect("{")
        body: List[SetStatus] = []
        while self.peek().kind != "}":
            body.append(self.parse_set())
            self.expect(";")
        close = self.expect("}")
        return RectifyRule(target.text, guard, tuple(body), self.span_from(start, close))

    def parse_constraint(self) -> Constraint:
        start = self.expect_kw("constraint")
        description = self.expect("STRING", "a constraint description")
        deadline: Optional[int] = None
        overridable: Optional[str] = None
        if self.at_kw("deadline"):
            self.next()
            num = self.expect("NUMBER", "a day count")
            if num.value.denominator != 1 or num.value <= 0:
                raise ParseError("deadline must be a positive whole number of days",
                                 num.line, num.col, expected="a positive integer", found=num.text)
            deadline = int(num.value)
            self.expect_kw("days")
        if self.at_kw("overridable"):
            self.next()
            self.expect_kw("by")
            overridable = self.ident("a party name").text
        end = self.expect(";")
        return Constraint(description.value, deadline, overridable, self.span_from(start, end))


def parse(source: str) -> ContractAst:
    """Parse contract DSL text into an AST. Raises ParseError on bad input."""
    return _Parser(source).parse_contract()


def parse_expression(source: str) -> Expr:
    """Parse a standalone expression (used by tests and tooling)."""
    parser = _Parser(source)
    expr = parser.parse_expr()
    parser.expect("EOF", "end of input")
    return expr


# ---------------------------------------------------------------------------
# Scenario files


@dataclass(frozen=True)
class Scenario:
    """Input bindings for one evaluation, keyed by input name."""

    bindings: Dict[str, Value] = field(default_factory=dict)
    source: str = ""


def parse_scenario(source: str) -> Scenario:
    """Parse `name = literal` lines into a Scenario.

    Blank lines and `#` comments are allowed. Binding the same name twice
    is rejected: silent overrides hide scenario mistakes.
    """
    parser = _Parser(source)
    bindings: Dict[str, Value] = {}
    while parser.peek().kind != "EOF":
        name = parser.ident("an input name")
        parser.expect("=")
        negate = False
        if parser.peek().kind == "-":
            parser.next()
            negate = True
        expr = parser.parse_primary()
        if not isinstance(expr, Lit):
            raise ParseError("scenario values must be literals", expr.span.line, expr.span.col,
                             expected="a literal", found=type(expr).__name__)
        value = expr.value
        if negate:
            if isinstance(value, Fraction):
                value = -value
            elif isinstance(value, Money):
                value = Money(value.currency, -value.amount)
            else:
                raise ParseError("only numbers and money may be negated", expr.span.line,
                                 expr.span.col, expected="a number or money literal", found=str(value))
        if name.text in bindings:
            raise ParseError(f"'{name.text}' is bound twice", name.line, name.col,
                             expected="a fresh input name", found=name.text)
        bindings[name.text] = value
    return Scenario(bindings=bindings)
