"""Expression DSL for scalar potentials on an affine chart.

The grammar is plain infix over variables ``x1 .. xn``::

    expr   :=  term  (("+" | "-") term)*
    term   :=  unary (("*" | "/") unary)*
    unary  :=  "-" unary | power
    power  :=  atom ("^" unary)?          # right associative
    atom   :=  NUMBER | NAME "(" expr ")" | NAME | "(" expr ")"

``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``.
Numbers are decimal literals with an optional exponent part.  The available
functions are log, exp, sqrt, sin and cos.  Whitespace is insignificant.

Parsing returns a small immutable AST; :func:`to_source` prints it back so
that parse -> print -> parse yields a structurally identical tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

FUNCTION_NAMES = ("log", "exp", "sqrt", "sin", "cos")

_VAR_RE = re.compile(r"^x([0-9]+)$")
_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class ParseError(ValueError):
    """Malformed source; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class DomainError(ValueError):
    """Evaluation left the domain (log/sqrt of a non-positive value, ...)."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, so Var(1) is x1


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op
    text: str
    pos: int


def _tokenize(source: str) -> Iterator[_Token]:
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            m = _NUMBER_RE.match(source, i)
            if m is None:
                raise ParseError(f"malformed number {ch!r}", i)
            yield _Token("number", m.group(0), i)
            i = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _NAME_RE.match(source, i)
            yield _Token("name", m.group(0), i)
            i = m.end()
            continue
        if ch in "+-*/^()":
            yield _Token("op", ch, i)
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i)


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = list(_tokenize(source))
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.source))
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            offset = tok.pos if tok is not None else len(self.source)
            raise ParseError(f"expected {text!r}", offset)
        return self.next()

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while (tok := self.peek()) is not None and tok.text in "+-":
            self.next()
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while (tok := self.peek()) is not None and tok.text in "*/":
            self.next()
            node = BinOp(tok.text, node, self.unary())
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok is not None and tok.text == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok.text == "^":
            self.next()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.next()
        if tok.kind == "number":
            return Num(float(tok.text))
        if tok.kind == "name":
            if tok.text in FUNCTION_NAMES:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            m = _VAR_RE.match(tok.text)
            if m is None:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.pos)
            index = int(m.group(1))
            if not 1 <= index <= self.dim:
                raise ParseError(
                    f"variable index {index} out of range (dimension {self.dim})",
                    tok.pos,
                )
            return Var(index)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)


def parse_potential(source: str, dim: int) -> Expression:
    """Parse ``source`` into an AST over variables x1..x``dim``."""
    if not source or not source.strip():
        raise ParseError("empty source", 0)
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return _Parser(source, dim).parse()


# Printing ------------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _precedence(node: Expression) -> int:
    if isinstance(node, (Num, Var, Call)):
        return _PREC_ATOM
    if isinstance(node, Neg):
        return _PREC_NEG
    return {"+": _PREC_ADD, "-": _PREC_ADD,
            "*": _PREC_MUL, "/": _PREC_MUL,
            "^": _PREC_POW}[node.op]


def _wrap(node: Expression, limit: int, strict: bool = False) -> str:
    src = to_source(node)
    prec = _precedence(node)
    if prec < limit or (strict and prec == limit):
        return f"({src})"
    return src


def to_source(node: Expression) -> str:
    """Render an AST back to parseable source text."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _PREC_NEG)
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if node.op in "+-":
        return f"{_wrap(node.left, _PREC_ADD)} {node.op} {_wrap(node.right, _PREC_ADD, strict=True)}"
    if node.op in "*/":
        return f"{_wrap(node.left, _PREC_MUL)}{node.op}{_wrap(node.right, _PREC_MUL, strict=True)}"
    # '^' is right associative and its base is syntactically an atom
    return f"{_wrap(node.left, _PREC_ATOM)}^{_wrap(node.right, _PREC_NEG)}"


def variables_used(node: Expression) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Neg):
        return variables_used(node.operand)
    if isinstance(node, Call):
        return variables_used(node.arg)
    if isinstance(node, BinOp):
        return variables_used(node.left) | variables_used(node.right)
    return set()


# Plain numeric evaluation ---------------------------------------------------

_NUMERIC_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
}


def evaluate(node: Expression, values: Sequence[float] | Sequence[np.ndarray]):
    """Evaluate on floats or numpy arrays (``values[i-1]`` backs ``xi``).

    Domain violations raise :class:`DomainError` instead of yielding NaN.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return values[node.index - 1]
    if isinstance(node, Neg):
        return -evaluate(node.operand, values)
    if isinstance(node, Call):
        arg = evaluate(node.arg, values)
        if node.func == "log":
            if np.any(np.asarray(arg) <= 0):
                raise DomainError("log of non-positive argument")
            return np.log(arg)
        if node.func == "sqrt":
            if np.any(np.asarray(arg) < 0):
                raise DomainError("sqrt of negative argument")
            return np.sqrt(arg)
        return _NUMERIC_FUNCS[node.func](arg)
    left = evaluate(node.left, values)
    right = evaluate(node.right, values)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            raise DomainError("division by zero")
        return left / right
    # '^': integer exponents act on any base, real ones need a positive base
    r = np.asarray(right)
    if r.ndim == 0 and float(r) == int(float(r)):
        return np.power(left, int(float(r)))
    if np.any(np.asarray(left) <= 0):
        raise DomainError("real exponent requires positive base")
    return np.power(left, right)
