"""Recursive-descent parser for the concrete formula syntax.

Grammar (whitespace-insensitive, loosest binding first)::

    formula  := lattice
    lattice  := additive (('max' | 'min') additive)*
    additive := product (('+' | '-' | '-.') product)*
    product  := unary ('*' unary)*
    unary    := RAT '*' unary                      -- scaling
              | primary
    primary  := RAT
              | '(' formula ')'
              | ('abs' | 'neg') '(' formula ')'
              | ('sup' | 'inf') VAR ':' SORT '.' formula
              | 'd' '[' SORT ']' '(' term ',' term ')'
              | REL '(' [term {',' term}] ')'
    term     := VAR | CONST | FUNC '(' term {',' term} ')'
    RAT      := ['-'] digits ['/' digits]

All binary operators are left associative.  The printer in
:mod:`cfol.syntax` emits fully parenthesized binary nodes, so printed text
reparses to the same tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import InputError, ParseError
from .rational import Fraction
from .signature import Signature
from .syntax import (
    App,
    Atomic,
    Binary,
    Const,
    Dist,
    Formula,
    Quant,
    Scale,
    Term,
    Unary,
    Var,
    check_formula,
)

__all__ = ["parse_formula", "parse_term", "tokenize", "Token"]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<dotminus>-\.)
  | (?P<punct>[()\[\],:.+\-*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | op | eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind == "num":
            tokens.append(Token("num", m.group(), pos))
        elif kind == "ident":
            tokens.append(Token("ident", m.group(), pos))
        elif kind in ("dotminus", "punct"):
            tokens.append(Token("op", m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature, context: Mapping[str, str], infer: bool = False):
        self.text = text
        self.sig = sig
        self.tokens = tokenize(text)
        self.i = 0
        self.scope: dict[str, str] = dict(context)
        self.infer = infer
        self.inferred: dict[str, str] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.pos, self.text)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}")
        tok = self.tok
        self.i += 1
        return tok

    def rational_ahead(self) -> int:
        """Number of tokens forming a rational literal at the cursor (0 if none)."""
        if self.tok.kind == "num":
            return 1
        if self.at("-") and self.peek().kind == "num" and self.peek().pos == self.tok.pos + 1:
            return 2
        return 0

    def rational(self) -> Fraction:
        n = self.rational_ahead()
        if not n:
            raise self.error("expected a rational")
        sign = -1 if n == 2 else 1
        if n == 2:
            self.i += 1
        num, _, den = self.tok.text.partition("/")
        if den and int(den) == 0:
            raise self.error("zero denominator")
        self.i += 1
        return sign * Fraction(int(num), int(den) if den else 1)

    # -- grammar -----------------------------------------------------------

    def formula(self) -> Formula:
        left = self.additive()
        while self.tok.kind == "ident" and self.tok.text in ("max", "min"):
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.additive())
        return left

    def additive(self) -> Formula:
        left = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-", "-."):
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.product())
        return left

    def product(self) -> Formula:
        left = self.unary()
        while self.at("*"):
            self.i += 1
            left = Binary("*", left, self.unary())
        return left

    def unary(self) -> Formula:
        n = self.rational_ahead()
        if n and self.peek(n).kind == "op" and self.peek(n).text == "*":
            q = self.rational()
            self.expect("*")
            return Scale(q, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.tok
        if self.rational_ahead():
            return Const(self.rational())
        if self.at("("):
            self.i += 1
            inner = self.formula()
            self.expect(")")
            return inner
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise self.error(f"expected a formula, found {found!r}")
        word = tok.text
        if word in ("abs", "neg"):
            self.i += 1
            self.expect("(")
            inner = self.formula()
            self.expect(")")
            return Unary(word, inner)
        if word in ("sup", "inf"):
            self.i += 1
            var = self.ident("a variable").text
            self.expect(":")
            sort_tok = self.ident("a sort")
            if sort_tok.text not in self.sig.sort_map:
                raise self.error(f"unknown sort {sort_tok.text!r}", sort_tok)
            self.expect(".")
            saved = self.scope.get(var)
            self.scope[var] = sort_tok.text
            body = self.formula()
            if saved is None:
                del self.scope[var]
            else:
                self.scope[var] = saved
            return Quant(word, var, sort_tok.text, body)
        if word == "d" and self.peek().kind == "op" and self.peek().text == "[":
            self.i += 2
            sort_tok = self.ident("a sort")
            if sort_tok.text not in self.sig.sort_map:
                raise self.error(f"unknown sort {sort_tok.text!r}", sort_tok)
            self.expect("]")
            self.expect("(")
            left = self.term(sort_tok.text)
            self.expect(",")
            right = self.term(sort_tok.text)
            self.expect(")")
            return Dist(sort_tok.text, left, right)
        if word in self.sig.relation_map:
            self.i += 1
            return Atomic(word, self.arguments(self.sig.relation_map[word].domain))
        raise self.error(f"unknown relation symbol {word!r}")

    def arguments(self, domain=()) -> list[Term]:
        self.expect("(")
        args: list[Term] = []

        def expected() -> str | None:
            return domain[len(args)] if len(args) < len(domain) else None

        if not self.at(")"):
            args.append(self.term(expected()))
            while self.at(","):
                self.i += 1
                args.append(self.term(expected()))
        self.expect(")")
        return args

    def term(self, expected: str | None = None) -> Term:
        tok = self.ident("a term")
        name = tok.text
        if self.at("("):
            if name not in self.sig.function_map:
                raise self.error(f"unknown function symbol {name!r}", tok)
            return App(name, self.arguments(self.sig.function_map[name].domain))
        if name in self.scope:
            return Var(name, self.scope[name])
        f = self.sig.function_map.get(name)
        if f is not None and not f.domain:
            return App(name, ())
        if self.infer and expected is not None:
            srt = self.inferred.setdefault(name, expected)
            if srt != expected:
                raise self.error(f"free variable {name!r} used at sorts {srt} and {expected}", tok)
            return Var(name, srt)
        raise self.error(f"unbound variable {name!r}", tok)


def parse_formula(
    text: str, signature: Signature, context: Mapping[str, str] | None = None, infer_free: bool = False
) -> Formula:
    """Parse ``text`` into a well-sorted formula over ``signature``.

    ``context`` maps free variable names to sort names.  With ``infer_free``
    an unknown name in argument position becomes a free variable of the sort
    that position expects.
    """
    p = _Parser(text, signature, context or {}, infer_free)
    phi = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    try:
        check_formula(phi, signature)
    except InputError as exc:
        raise ParseError(f"sort error: {exc}") from exc
    return phi


def parse_term(text: str, signature: Signature, context: Mapping[str, str] | None = None) -> Term:
    p = _Parser(text, signature, context or {})
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return t
