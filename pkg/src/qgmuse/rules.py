"""Boolean composition rules: AST, parser, printer and brute-force solver.

Concrete syntax (whitespace-insensitive)::

    expr    := xor ( "|" xor )*
    xor     := and ( "^" and )*
    and     := unary ( "&" unary )*
    unary   := "!" unary | primary
    primary := IDENT | "(" expr ")"

A rule is always read as ``expr = 1``.  Variables are numbered by first
occurrence, left to right; the i-th variable is qubit i.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Union

import numpy as np

from .errors import CapacityError, EvaluationError, RuleSyntaxError

MAX_VARS = 20


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    child: "BoolExpr"


@dataclass(frozen=True)
class And:
    children: tuple["BoolExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Or:
    children: tuple["BoolExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or needs at least two operands")


@dataclass(frozen=True)
class Xor:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Union[Var, Not, And, Or, Xor]


@dataclass(frozen=True)
class TruthTable:
    """Satisfying basis indices; variable i sits at bit i of an index."""

    num_vars: int
    satisfying: frozenset[int]

    def __len__(self):
        return len(self.satisfying)

    def labels(self) -> list[str]:
        return [format(i, f"0{self.num_vars}b") for i in sorted(self.satisfying)]


def children(expr: BoolExpr) -> tuple[BoolExpr, ...]:
    if isinstance(expr, Var):
        return ()
    if isinstance(expr, Not):
        return (expr.child,)
    if isinstance(expr, Xor):
        return (expr.left, expr.right)
    return expr.children


def walk(expr: BoolExpr) -> Iterator[BoolExpr]:
    """Pre-order, left-to-right traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def variables(expr: BoolExpr) -> list[str]:
    seen: dict[str, None] = {}
    for node in walk(expr):
        if isinstance(node, Var):
            seen.setdefault(node.name)
    return list(seen)


# -- parsing ---------------------------------------------------------------

_SPACE = re.compile(r"\s*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class _Token:
    kind: str  # "ident", an operator character, or "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def position(offset):
        line = max(i for i, start in enumerate(line_starts) if start <= offset)
        return line + 1, offset - line_starts[line] + 1

    pos = _SPACE.match(text).end()
    while pos < len(text):
        line, col = position(pos)
        m = _IDENT.match(text, pos)
        if m:
            tokens.append(_Token("ident", m.group(), line, col))
            pos = m.end()
        elif text[pos] in "!&|^()":
            tokens.append(_Token(text[pos], text[pos], line, col))
            pos += 1
        else:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        pos = _SPACE.match(text, pos).end()
    tokens.append(_Token("eof", "", *position(len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        tok = self.current
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise RuleSyntaxError(f"{message}, found {what}", tok.line, tok.column)

    def rule(self) -> BoolExpr:
        if self.current.kind == "eof":
            self.fail("empty rule")
        expr = self.expr()
        if self.current.kind != "eof":
            self.fail("expected an operator or end of input")
        return expr

    def expr(self) -> BoolExpr:
        items = [self.xor()]
        while self.current.kind == "|":
            self.advance()
            items.append(self.xor())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def xor(self) -> BoolExpr:
        left = self.and_()
        while self.current.kind == "^":
            self.advance()
            left = Xor(left, self.and_())
        return left

    def and_(self) -> BoolExpr:
        items = [self.unary()]
        while self.current.kind == "&":
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> BoolExpr:
        if self.current.kind == "!":
            self.advance()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> BoolExpr:
        tok = self.current
        if tok.kind == "ident":
            self.advance()
            return Var(tok.text)
        if tok.kind == "(":
            self.advance()
            inner = self.expr()
            if self.current.kind != ")":
                self.fail("expected ')'")
            self.advance()
            return inner
        self.fail("expected a variable, '!' or '('")


def parse_rule(text: str) -> BoolExpr:
    """Parse one rule; raises RuleSyntaxError with a 1-based line/column."""
    return _Parser(text).rule()


def load_rule(path) -> BoolExpr:
    """Read a rule file: UTF-8, ``#`` starts a comment line."""
    text = Path(path).read_text(encoding="utf-8")
    kept = ["" if line.lstrip().startswith("#") else line for line in text.splitlines()]
    return parse_rule("\n".join(kept))


# -- printing --------------------------------------------------------------

_PRECEDENCE = {Or: 1, Xor: 2, And: 3, Not: 4, Var: 5}


def to_text(expr: BoolExpr) -> str:
    """Render ``expr`` so that ``parse_rule(to_text(e)) == e``."""
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Not):
        inner = to_text(expr.child)
        if isinstance(expr.child, (Var, Not)):
            return "!" + inner
        return f"!({inner})"
    prec = _PRECEDENCE[type(expr)]

    def wrap(child, strict):
        text = to_text(child)
        cp = _PRECEDENCE[type(child)]
        return f"({text})" if cp < prec or (strict and cp == prec) else text

    if isinstance(expr, Xor):
        return f"{wrap(expr.left, False)} ^ {wrap(expr.right, True)}"
    sep = " & " if isinstance(expr, And) else " | "
    # A nested And inside an And must keep its parentheses to survive re-parsing.
    return sep.join(wrap(c, True) for c in expr.children)


# -- evaluation ------------------------------------------------------------

def evaluate(expr: BoolExpr, assignment: Mapping[str, int]) -> int:
    if isinstance(expr, Var):
        try:
            return 1 if assignment[expr.name] else 0
        except KeyError:
            raise EvaluationError(f"no value for variable {expr.name!r}") from None
    if isinstance(expr, Not):
        return 1 - evaluate(expr.child, assignment)
    if isinstance(expr, Xor):
        return evaluate(expr.left, assignment) ^ evaluate(expr.right, assignment)
    if isinstance(expr, And):
        return int(all(evaluate(c, assignment) for c in expr.children))
    return int(any(evaluate(c, assignment) for c in expr.children))


def assignment_of(index: int, names: list[str]) -> dict[str, int]:
    return {name: (index >> i) & 1 for i, name in enumerate(names)}


def truth_vector(expr: BoolExpr, names: list[str] | None = None) -> np.ndarray:
    """Boolean array over all 2^n assignments (vectorized scan)."""
    names = variables(expr) if names is None else names
    n = len(names)
    if n > MAX_VARS:
        raise CapacityError(f"{n} variables exceeds the limit of {MAX_VARS}")
    idx = np.arange(1 << n)
    columns = {name: ((idx >> i) & 1).astype(bool) for i, name in enumerate(names)}

    def ev(node):
        if isinstance(node, Var):
            return columns[node.name]
        if isinstance(node, Not):
            return ~ev(node.child)
        if isinstance(node, Xor):
            return ev(node.left) ^ ev(node.right)
        parts = [ev(c) for c in node.children]
        return np.logical_and.reduce(parts) if isinstance(node, And) else np.logical_or.reduce(parts)

    return ev(expr)


def enumerate_solutions(expr: BoolExpr) -> TruthTable:
    names = variables(expr)
    satisfying = np.flatnonzero(truth_vector(expr, names))
    return TruthTable(len(names), frozenset(int(i) for i in satisfying))


def solution_count(expr: BoolExpr) -> int:
    return len(enumerate_solutions(expr))
