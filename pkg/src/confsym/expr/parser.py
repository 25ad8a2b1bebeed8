"""Recursive-descent parser for the plain-text expression grammar.

Grammar (see docs/grammar.md)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` is right associative and binds tighter than unary minus, so ``-t^2``
is ``-(t^2)``. Numbers are decimal literals and are kept exact.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .nodes import (FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow,
                    Sym, is_known_name)


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class UnknownIdentifierError(ExprSyntaxError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self.text, pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", self.text, pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self) -> Expr:
        left = self.factor()
        factors = [left]
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            right = self.factor()
            if op == "*":
                factors.append(right)
            else:
                num = factors[0] if len(factors) == 1 else Mul(factors)
                factors = [Div(num, right)]
        return factors[0] if len(factors) == 1 else Mul(factors)

    def factor(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val), text=val)
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {val!r}", self.text, pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if not is_known_name(val):
                raise UnknownIdentifierError(f"unknown identifier {val!r}", self.text, pos)
            return Sym(val)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", self.text, pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into a raw expression tree."""
    return _Parser(text).parse()
