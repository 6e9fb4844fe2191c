"""Parser and printer for the textual rule sub-syntax.

    Vehicle(?v), on(?v, ?p), not Occupied(?q) -> may_perform(?v, Follow)
    Truck(?t), performs(?t, LaneChangeLeft) -> !Forbidden

Grammar and examples are in docs/rule-language.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from sceneforge.kb import Atom, Rule, RuleKind, Term, Var, VerdictKind

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<var>\?[A-Za-z][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<bang>!)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
    """,
    re.VERBOSE,
)


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        self.message = message
        super().__init__(f"{message} at offset {offset}: {text[:offset]}<HERE>{text[offset:]}")


@dataclass
class _Tok:
    kind: str
    value: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == "#" or text.startswith("//", pos):
                raise RuleSyntaxError("comments are not permitted in rules", text, pos)
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str, what: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.value or "end of rule"
            raise RuleSyntaxError(f"expected {what}, found {found!r}", self.text, tok.offset)
        self.i += 1
        return tok

    def atom(self) -> Atom:
        pred = self.take("ident", "predicate name").value
        self.take("lparen", "'('")
        args: list[Term] = [self.term()]
        while self.peek().kind == "comma":
            self.i += 1
            args.append(self.term())
        self.take("rparen", "')'")
        return Atom(pred, tuple(args))

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "var":
            self.i += 1
            return Var(tok.value[1:])
        if tok.kind == "ident":
            self.i += 1
            return tok.value
        raise RuleSyntaxError(f"expected a variable or constant, found {tok.value or 'end of rule'!r}", self.text, tok.offset)

    def rule(self, name: str) -> Rule:
        body: list[Atom] = []
        negated: list[Atom] = []
        while True:
            tok = self.peek()
            if tok.kind == "ident" and tok.value == "not" and self.toks[self.i + 1].kind == "ident":
                self.i += 1
                negated.append(self.atom())
            else:
                body.append(self.atom())
            if self.peek().kind == "comma":
                self.i += 1
                continue
            break
        self.take("arrow", "',' or '->'")
        if self.peek().kind == "bang":
            self.i += 1
            tok = self.take("ident", "verdict name")
            try:
                verdict = VerdictKind(tok.value)
            except ValueError:
                raise RuleSyntaxError(f"unknown verdict {tok.value!r}", self.text, tok.offset) from None
            rule = Rule(name, RuleKind.CONSTRAINT, tuple(body), tuple(negated), None, verdict)
        else:
            rule = Rule(name, RuleKind.INFERENCE, tuple(body), tuple(negated), self.atom(), None)
        self.take("eof", "end of rule")
        return rule


def parse_rule(name: str, text: str) -> Rule:
    """Parse one rule; raises :class:`RuleSyntaxError` with a character offset."""
    return _Parser(text).rule(name)


def parse_atom(text: str) -> Atom:
    p = _Parser(text)
    atom = p.atom()
    p.take("eof", "end of atom")
    return atom


def format_rule(rule: Rule) -> str:
    lits = [str(a) for a in rule.body] + [f"not {a}" for a in rule.negated]
    head = str(rule.head) if rule.head is not None else f"!{rule.verdict.value}"
    return f"{', '.join(lits)} -> {head}"
