"""Parser for the ``.hmet`` metric language.

A file is a header line followed by matrix entries::

    # comments run to end of line
    metric fs1 dim=1 rank=1 domain=entire
    h[1][1] = (1 + absq(z1))^-2

Statements are separated by newlines or ``;``.  Expressions use ``+ - * /``,
integer powers ``^k`` (``^-2`` allowed), ``log``, ``exp``, ``absq``, ``conj``,
coordinates ``z1..zn``, real literals and the imaginary unit ``I``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from rcpos.dsl.expr import Expr, absq, conj_node, exp, log
from rcpos.errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n|;)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<sym>[-+*/^()\[\]=:,])
    """,
    re.VERBOSE,
)

FUNCTIONS = {"log": log, "exp": exp, "absq": absq, "conj": conj_node}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            tokens.append(Token("newline", text, line, pos - line_start + 1))
            if text == "\n":
                line += 1
                line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], n_vars: int | None):
        self.toks = tokens
        self.i = 0
        self.n_vars = n_vars

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("sym", "ident") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not (self.tok.kind in ("sym", "ident") and self.tok.text == text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def skip_newlines(self):
        while self.tok.kind == "newline":
            self.i += 1

    def end_statement(self):
        if self.tok.kind not in ("newline", "eof"):
            raise self.error(f"unexpected {self.tok.text!r}")
        self.skip_newlines()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            raise self.error("expected an integer")
        self.i += 1
        return int(t.text)

    def header_atom(self, key: str) -> str:
        sign = "-" if self.accept("-") else ""
        if self.tok.kind not in ("ident", "number"):
            raise self.error(f"missing value for {key}")
        return sign + self.advance().text

    # expression grammar --------------------------------------------------------
    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "sym" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = Expr("add" if op == "+" else "sub", (node, rhs))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "sym" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.unary()
            node = Expr("mul" if op == "*" else "div", (node, rhs))
        return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Expr("neg", (self.unary(),))
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            paren = self.accept("(")
            sign = -1 if self.accept("-") else 1
            if not sign < 0:
                self.accept("+")
            k = sign * self.integer()
            if paren:
                self.expect(")")
            return Expr("pow", (base,), k)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return Expr.const(float(t.text))
        if t.kind == "ident":
            self.i += 1
            if t.text == "I":
                return Expr.const(1j)
            m = re.fullmatch(r"z(\d+)", t.text)
            if m:
                k = int(m.group(1))
                if k < 1 or (self.n_vars is not None and k > self.n_vars):
                    raise self.error(f"coordinate {t.text} out of range 1..{self.n_vars}", t)
                return Expr.z(k - 1)
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[t.text](arg)
            raise self.error(f"unknown identifier {t.text!r}", t)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {t.text or 'end of input'!r}")


def parse_expression(source: str, n_vars: int | None = None) -> Expr:
    """Parse a single expression in ``z1..z{n_vars}``."""
    p = _Parser(tokenize(source), n_vars)
    p.skip_newlines()
    node = p.expr()
    p.skip_newlines()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return node


@dataclass(frozen=True)
class MetricSource:
    """Syntax-level content of a metric file, before Hermitian completion."""

    name: str
    dim: int
    rank: int
    options: dict
    entries: dict  # (alpha, beta) zero-based -> (Expr, Token)


def parse_source(source: str) -> MetricSource:
    tokens = tokenize(source)
    p = _Parser(tokens, None)
    p.skip_newlines()
    if not p.accept("metric"):
        raise p.error("metric file must start with 'metric <name> dim=<n> rank=<r>'")
    if p.tok.kind != "ident":
        raise p.error("expected a metric name")
    name = p.advance().text
    options: dict[str, str] = {}
    while p.tok.kind == "ident":
        key_tok = p.advance()
        p.expect("=")
        parts = [p.header_atom(key_tok.text)]
        while p.accept(":"):
            parts.append(p.header_atom(key_tok.text))
        options[key_tok.text] = ":".join(parts)
    p.end_statement()
    try:
        dim = int(options.pop("dim"))
        rank = int(options.pop("rank"))
    except KeyError as exc:
        raise ParseError(f"header is missing {exc.args[0]}=", tokens[0].line, tokens[0].col) from None
    except ValueError:
        raise ParseError("dim and rank must be integers", tokens[0].line, tokens[0].col) from None
    if dim < 1 or rank < 1:
        raise ParseError("dim and rank must be at least 1", tokens[0].line, tokens[0].col)
    p.n_vars = dim
    entries: dict = {}
    while p.tok.kind != "eof":
        start = p.tok
        p.expect("h")
        p.expect("[")
        a = p.integer()
        p.expect("]")
        p.expect("[")
        b = p.integer()
        p.expect("]")
        if not (1 <= a <= rank and 1 <= b <= rank):
            raise ParseError(f"entry h[{a}][{b}] outside rank {rank}", start.line, start.col)
        if (a - 1, b - 1) in entries:
            raise ParseError(f"duplicate entry h[{a}][{b}]", start.line, start.col)
        p.expect("=")
        entries[(a - 1, b - 1)] = (p.expr(), start)
        p.end_statement()
    return MetricSource(name, dim, rank, options, entries)
