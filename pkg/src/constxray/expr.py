"""A tiny expression language for sound-speed profiles ``c(r)``.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | 'r' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := exp | sin | cos | sqrt | log

``^`` is right-associative and binds tighter than unary minus, so
``-r^2`` is ``-(r^2)``.  Diagnostics report 1-based character offsets.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "log": np.log,
}

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


class ProfileSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.reason = message
        self.offset = offset
        self.text = text


class UnknownIdentifierError(ProfileSyntaxError):
    pass


class Node:
    prec = _PREC["atom"]

    def evaluate(self, r):
        raise NotImplementedError

    def derivative(self) -> "Node":
        raise NotImplementedError

    def __str__(self):
        return self.render()


@dataclass(frozen=True, eq=True)
class Num(Node):
    value: float

    def evaluate(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.value)

    def derivative(self):
        return Num(0.0)

    def render(self):
        if np.isinf(self.value):
            text = "1e999" if self.value > 0 else "-1e999"
        else:
            text = repr(float(self.value))
        return f"({text})" if self.value < 0 or text.startswith("-") else text


@dataclass(frozen=True, eq=True)
class Var(Node):
    def evaluate(self, r):
        return np.asarray(r, dtype=float)

    def derivative(self):
        return Num(1.0)

    def render(self):
        return "r"


@dataclass(frozen=True, eq=True)
class Neg(Node):
    arg: Node
    prec = _PREC["neg"]

    def evaluate(self, r):
        return -self.arg.evaluate(r)

    def derivative(self):
        return neg(self.arg.derivative())

    def render(self):
        inner = self.arg.render()
        return f"-({inner})" if self.arg.prec < self.prec else f"-{inner}"


@dataclass(frozen=True, eq=True)
class Call(Node):
    name: str
    arg: Node

    def evaluate(self, r):
        return FUNCTIONS[self.name](self.arg.evaluate(r))

    def derivative(self):
        a, da = self.arg, self.arg.derivative()
        outer = {
            "exp": lambda: self,
            "sin": lambda: Call("cos", a),
            "cos": lambda: neg(Call("sin", a)),
            "sqrt": lambda: div(Num(0.5), self),
            "log": lambda: div(Num(1.0), a),
        }[self.name]()
        return mul(outer, da)

    def render(self):
        return f"{self.name}({self.arg.render()})"


@dataclass(frozen=True, eq=True)
class Bin(Node):
    op: str
    left: Node
    right: Node

    @property
    def prec(self):
        return _PREC[self.op]

    def evaluate(self, r):
        a, b = self.left.evaluate(r), self.right.evaluate(r)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def derivative(self):
        u, v = self.left, self.right
        du, dv = u.derivative(), v.derivative()
        if self.op == "+":
            return add(du, dv)
        if self.op == "-":
            return sub(du, dv)
        if self.op == "*":
            return add(mul(du, v), mul(u, dv))
        if self.op == "/":
            return div(sub(mul(du, v), mul(u, dv)), mul(v, v))
        if isinstance(v, Num):
            return mul(mul(v, power(u, Num(v.value - 1.0))), du)
        # d(u^v) = u^v (v' log u + v u'/u)
        return mul(self, add(mul(dv, Call("log", u)), div(mul(v, du), u)))

    def render(self):
        p = self.prec
        left, right = self.left.render(), self.right.render()
        if self.op == "^":
            if self.left.prec < _PREC["atom"]:
                left = f"({left})"
            if self.right.prec < _PREC["neg"]:
                right = f"({right})"
        else:
            if self.left.prec < p:
                left = f"({left})"
            if self.right.prec <= p:
                right = f"({right})"
        return f"{left}{self.op}{right}"


# -- light simplification used by the derivative builders -------------

def _is(node, value):
    return isinstance(node, Num) and node.value == value


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Bin("-", a, b)


def mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return Num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def div(a, b):
    if _is(a, 0.0):
        return Num(0.0)
    if _is(b, 1.0):
        return a
    return Bin("/", a, b)


def power(a, b):
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return Num(1.0)
    return Bin("^", a, b)


# -- tokenizer and recursive-descent parser ---------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:]
            if not rest.strip():
                break
            offset = pos + len(rest) - len(rest.lstrip()) + 1
            raise ProfileSyntaxError(f"unexpected character {text[offset - 1]!r}", offset, text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ProfileSyntaxError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def primary(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value == "r":
                return Var()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", tok[2], self.text)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise self.error(f"unexpected {found}", tok)


def parse_profile(text: str) -> Node:
    """Parse a profile expression in the variable ``r``.

    Raises
    ------
    ProfileSyntaxError
        With a 1-based ``offset`` into ``text``.
    """
    parser = _Parser(text)
    try:
        return parser.parse()
    except RecursionError:
        raise ProfileSyntaxError("expression nested too deeply", parser.peek()[2], text) from None
