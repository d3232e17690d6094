"""Coefficient expressions: a tiny grammar for scalar functions of ``x``.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 'x' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of sin, cos, exp, ln, sqrt, abs.  ``-x^2`` parses as
``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

X = Var()


def Add(a: Expr, b: Expr) -> BinOp:
    return BinOp("+", a, b)


def Sub(a: Expr, b: Expr) -> BinOp:
    return BinOp("-", a, b)


def Mul(a: Expr, b: Expr) -> BinOp:
    return BinOp("*", a, b)


def Div(a: Expr, b: Expr) -> BinOp:
    return BinOp("/", a, b)


def Pow(a: Expr, b: Expr) -> BinOp:
    return BinOp("^", a, b)


class ExprSyntaxError(ValueError):
    def __init__(self, text: str, offset: int, expected: str):
        found = repr(text[offset]) if offset < len(text) else "end of input"
        super().__init__(f"syntax error at offset {offset}: expected {expected}, found {found}")
        self.text = text
        self.offset = offset
        self.expected = expected


class DomainError(ArithmeticError):
    """Evaluation produced a non-finite value."""

    def __init__(self, x: float, subexpr: Expr, message: str = ""):
        detail = f" ({message})" if message else ""
        super().__init__(f"non-finite value at x={x!r} in '{to_text(subexpr)}'{detail}")
        self.x = x
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(text, pos, "a number, name, operator or parenthesis")
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

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected: str):
        raise ExprSyntaxError(self.text, self.tok[2], expected)

    def accept(self, value: str) -> bool:
        if self.tok[0] == "op" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.accept(value):
            self.fail(f"'{value}'")

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok[0] != "end":
            self.fail("an operator or end of input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, value, _ = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(value))
        if kind == "name":
            if value == "x":
                self.i += 1
                return X
            if value in CONSTANTS:
                self.i += 1
                return Const(value)
            if value in FUNCTIONS:
                self.i += 1
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            self.fail("x, pi, e or one of " + ", ".join(FUNCTIONS))
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("a number, x, a constant, a function call or '('")


def parse(text: str) -> Expr:
    """Parse expression text into an AST.

    Raises:
        ExprSyntaxError: carries the character offset and what was expected.
    """
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Render an expression; every compound subterm is parenthesized so the
    output re-parses to the identical tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# evaluation

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}

_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def _apply_scalar(e: Expr, x: float) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    try:
        if isinstance(e, Neg):
            value = -_apply_scalar(e.arg, x)
        elif isinstance(e, Call):
            value = float(_SCALAR_FUNCS[e.func](_apply_scalar(e.arg, x)))
        else:
            a = _apply_scalar(e.left, x)
            b = _apply_scalar(e.right, x)
            if e.op == "+":
                value = a + b
            elif e.op == "-":
                value = a - b
            elif e.op == "*":
                value = a * b
            elif e.op == "/":
                value = a / b
            else:
                value = math.pow(a, b)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise DomainError(x, e, str(exc)) from None
    if not math.isfinite(value):
        raise DomainError(x, e)
    return value


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at ``x`` in double precision.

    Raises:
        DomainError: a subexpression is non-finite (division by zero, ln of a
            non-positive number, sqrt of a negative number, overflow).
    """
    return _apply_scalar(e, float(x))


def _apply_array(e: Expr, xs: np.ndarray) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(xs.shape, e.value)
    if isinstance(e, Var):
        return xs
    if isinstance(e, Const):
        return np.full(xs.shape, CONSTANTS[e.name])
    if isinstance(e, Neg):
        value = -_apply_array(e.arg, xs)
    elif isinstance(e, Call):
        value = _ARRAY_FUNCS[e.func](_apply_array(e.arg, xs))
    else:
        a = _apply_array(e.left, xs)
        b = _apply_array(e.right, xs)
        if e.op == "+":
            value = a + b
        elif e.op == "-":
            value = a - b
        elif e.op == "*":
            value = a * b
        elif e.op == "/":
            value = a / b
        else:
            value = np.power(a, b)
    bad = ~np.isfinite(value)
    if bad.any():
        raise DomainError(float(xs[np.argmax(bad)]), e)
    return value


def evaluate_many(e: Expr, xs) -> np.ndarray:
    """Vectorized ``evaluate`` over an array of points, same domain rules."""
    xs = np.asarray(xs, dtype=np.float64)
    with np.errstate(all="ignore"):
        return _apply_array(e, xs)

