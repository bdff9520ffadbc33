"""Small arithmetic expression language.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' atom)?
    atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')' | '-' atom

Evaluation is vectorised: variables may be bound to numpy arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

UNARY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
}
NARY_FUNCS = {"min": np.minimum, "max": np.maximum}
FUNCS = set(UNARY_FUNCS) | set(NARY_FUNCS)

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ArithmeticError):
    """Raised when an expression is undefined at some input."""


Value = Union[float, np.ndarray]


class Expr:
    def evaluate(self, env: Mapping[str, Value]) -> Value:
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)

    def __call__(self, **env: Value) -> Value:
        return self.evaluate(env)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise EvalError(f"unbound variable {self.name!r}") from None

    def variables(self):
        return frozenset([self.name])


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def variables(self):
        return self.operand.variables()


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalError("division by zero")
            return a / b
        if self.op == "^":
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                out = np.power(np.asarray(a, dtype=float), b)
            if not np.all(np.isfinite(out)):
                raise EvalError(f"power undefined: {to_text(self)}")
            return out if np.ndim(out) else float(out)
        raise EvalError(f"unknown operator {self.op!r}")

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def evaluate(self, env):
        vals = [a.evaluate(env) for a in self.args]
        if self.name in NARY_FUNCS:
            fn = NARY_FUNCS[self.name]
            out = vals[0]
            for v in vals[1:]:
                out = fn(out, v)
            return out
        x = vals[0]
        if self.name == "sqrt" and np.any(np.asarray(x) < 0):
            raise EvalError("sqrt of negative value")
        if self.name == "log" and np.any(np.asarray(x) <= 0):
            raise EvalError("log of non-positive value")
        out = UNARY_FUNCS[self.name](x)
        return out if np.ndim(out) else float(out)

    def variables(self):
        out = frozenset()
        for a in self.args:
            out |= a.variables()
        return out


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            what = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise ExprSyntaxError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.atom()
        if self.peek()[1] == "^":
            self.take()
            node = BinOp("^", node, self.atom())
        return node

    def atom(self):
        kind, val, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(val))
        if kind == "ident":
            self.take()
            if self.peek()[1] == "(":
                if val not in FUNCS:
                    raise ExprSyntaxError(f"unknown function {val!r}", off)
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if val in UNARY_FUNCS and len(args) != 1:
                    raise ExprSyntaxError(f"{val} takes exactly one argument", off)
                return Call(val, tuple(args))
            return Var(val)
        if val == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if val == "-":
            self.take()
            return Neg(self.atom())
        what = repr(val) if kind != "end" else "end of input"
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


# -- printing ----------------------------------------------------------------

def _num_text(v: float) -> str:
    if v < 0:
        return f"(-{_num_text(-v)})"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render `e` so that parsing the text rebuilds the same tree."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_text(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = e.operand
        body = to_text(inner)
        if isinstance(inner, BinOp):
            body = f"({body})"
        return f"-{body}"
    if isinstance(e, BinOp):
        if e.op == "^":
            return f"{_pow_operand(e.left)}^{_pow_operand(e.right)}"
        prec = _PRECEDENCE[e.op]
        left = to_text(e.left)
        if isinstance(e.left, BinOp) and _PRECEDENCE[e.left.op] < prec:
            left = f"({left})"
        right = to_text(e.right)
        # left-associative: equal precedence on the right needs parentheses
        if isinstance(e.right, BinOp) and _PRECEDENCE[e.right.op] <= prec and e.right.op != "^":
            right = f"({right})"
        if isinstance(e.right, Neg) and e.op in "+-":
            right = f"({right})"
        return f"{left} {e.op} {right}" if prec == 1 else f"{left}*{right}" if e.op == "*" else f"{left}/{right}"
    raise TypeError(f"not an expression: {e!r}")


def _pow_operand(e: Expr) -> str:
    if isinstance(e, (Var, Call)) or (isinstance(e, Num) and e.value >= 0):
        return to_text(e)
    return f"({to_text(e)})"
