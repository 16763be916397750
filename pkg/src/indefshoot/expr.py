"""Single-variable arithmetic expressions for weights and nonlinearities.

Grammar (lowest to highest precedence)::

    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | NAME | NAME "(" args ")" | "(" sum ")"

``^`` is right-associative and binds tighter than unary minus, so
``-2^2 == -4`` and ``2^3^2 == 512``.  The only names are the declared
variable, the constant ``pi`` and the functions in :data:`FUNCTIONS`.

Parsed expressions are compiled once to a Python closure over ``math``;
evaluation raises :class:`DomainError` instead of returning NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

__all__ = [
    "FUNCTIONS",
    "DomainError",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "LexError",
    "UnknownVariableError",
    "evaluate",
    "parse",
]

#: function name -> arity
FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "atan": 1,
    "abs": 1,
    "sqrt": 1,
    "max": 2,
    "min": 2,
}


class ExprError(ValueError):
    """Base class for parse errors; ``offset`` is a byte offset into the source."""

    kind = "expression error"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{self.kind} at offset {offset}: {message}")
        self.message = message
        self.offset = offset


class LexError(ExprError):
    kind = "lexical error"


class ExprSyntaxError(ExprError):
    kind = "syntax error"


class UnknownVariableError(ExprError):
    kind = "unknown variable"


class DomainError(ArithmeticError):
    """Raised on log of a non-positive number, division by zero, etc."""


# -- tree -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Pi, Neg, BinOp, Call]


# -- lexer ------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(source)

    def boff(k):
        return len(source[:k].encode("utf-8"))

    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                value = float(text)
            except ValueError:
                raise LexError(f"malformed number {text!r}", boff(i)) from None
            if not math.isfinite(value):
                raise LexError(f"number {text!r} overflows", boff(i))
            tokens.append(_Token("num", text, boff(i)))
            i = j
        elif c.isascii() and (c.isalpha() or c == "_"):
            j = i
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("name", source[i:j], boff(i)))
            i = j
        elif c in "+-*/^(),":
            tokens.append(_Token("op", c, boff(i)))
            i += 1
        else:
            raise LexError(f"unexpected character {c!r}", boff(i))
    tokens.append(_Token("end", "", boff(n)))
    return tokens


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, variable: str):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variable = variable

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.offset)
        return self.advance()

    def parse(self) -> Node:
        node = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset)
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "op" and tok.text == "(":
            node = self.sum()
            self.expect(")")
            return node
        if tok.kind == "end":
            raise ExprSyntaxError("unexpected end of input", tok.offset)
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset)

    def name(self, tok: _Token) -> Node:
        name = tok.text
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            if name not in FUNCTIONS:
                raise LexError(f"unknown function {name!r}", tok.offset)
            self.advance()
            args = [self.sum()]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                args.append(self.sum())
            close = self.expect(")")
            if len(args) != FUNCTIONS[name]:
                raise ExprSyntaxError(
                    f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", close.offset
                )
            return Call(name, tuple(args))
        if name in FUNCTIONS:
            raise ExprSyntaxError(f"function {name!r} needs an argument list", nxt.offset)
        if name == "pi":
            return Pi()
        if name == self.variable:
            return Var(name)
        raise UnknownVariableError(
            f"unknown name {name!r} (the variable is {self.variable!r})", tok.offset
        )


# -- evaluation -------------------------------------------------------------


def _div(a, b):
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _pow(a, b):
    if a == 0.0 and b < 0.0:
        raise DomainError("zero raised to a negative power")
    try:
        return math.pow(a, b)
    except OverflowError:
        if a < 0.0 and float(b).is_integer() and int(b) % 2:
            return -math.inf
        return math.inf
    except ValueError:
        raise DomainError(f"{a!r}^{b!r} is not real") from None


def _log(a):
    if a <= 0.0:
        raise DomainError(f"log of non-positive argument {a!r}")
    return math.log(a)


def _sqrt(a):
    if a < 0.0:
        raise DomainError(f"sqrt of negative argument {a!r}")
    return math.sqrt(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _max(a, b):
    return a if a >= b else b


def _min(a, b):
    return a if a <= b else b


_RUNTIME = {
    "_div": _div,
    "_pow": _pow,
    "_log": _log,
    "_sqrt": _sqrt,
    "_exp": _exp,
    "_max": _max,
    "_min": _min,
    "_sin": math.sin,
    "_cos": math.cos,
    "_atan": math.atan,
    "_abs": abs,
    "_PI": math.pi,
}


def _codegen(node: Node, arg: str) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Pi):
        return "_PI"
    if isinstance(node, Var):
        return arg
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand, arg)})"
    if isinstance(node, BinOp):
        a = _codegen(node.left, arg)
        b = _codegen(node.right, arg)
        if node.op == "/":
            return f"_div({a}, {b})"
        if node.op == "^":
            return f"_pow({a}, {b})"
        return f"({a} {node.op} {b})"
    if isinstance(node, Call):
        args = ", ".join(_codegen(a, arg) for a in node.args)
        return f"_{node.name}({args})"
    raise TypeError(f"not an expression node: {node!r}")


def _to_text(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_to_text(node.left)} {node.op} {_to_text(node.right)})"
    return f"{node.name}({', '.join(_to_text(a) for a in node.args)})"


class Expr:
    """A parsed expression in one variable.  Immutable and callable."""

    __slots__ = ("source", "variable", "tree", "_fn")

    def __init__(self, source: str, variable: str, tree: Node):
        self.source = source
        self.variable = variable
        self.tree = tree
        code = f"lambda _v: {_codegen(tree, '_v')}"
        self._fn = eval(compile(code, "<expr>", "eval"), dict(_RUNTIME))

    def __call__(self, value: float) -> float:
        try:
            return self._fn(value)
        except ZeroDivisionError:
            raise DomainError("division by zero") from None
        except OverflowError:
            return math.inf

    def __repr__(self):
        return f"Expr({self.source!r}, variable={self.variable!r})"

    def __getstate__(self):
        return (self.source, self.variable)

    def __setstate__(self, state):
        source, variable = state
        other = parse(source, variable)
        for name in ("source", "variable", "tree", "_fn"):
            object.__setattr__(self, name, getattr(other, name))

    def to_text(self) -> str:
        """Fully parenthesised text that reparses to an equivalent tree."""
        return _to_text(self.tree)


def parse(source: str, variable: str = "x") -> Expr:
    """Parse ``source`` as an expression in ``variable``."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    if variable in FUNCTIONS or variable == "pi":
        raise ValueError(f"{variable!r} is reserved and cannot be the variable")
    return Expr(source, variable, _Parser(source, variable).parse())


def evaluate(e: Expr, value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"evaluation point must be finite, got {value!r}")
    return e(value)
