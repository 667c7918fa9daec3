"""Scalar field expressions: parsing, printing and evaluation on jets.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)*
    atom   := number | name | name '(' expr ')' | '(' expr ')'

``^`` only accepts integer exponents, written as a literal, optionally signed
and parenthesised (``x^2``, ``x^(-1)``).  General powers are spelled
``exp(a*ln(b))`` so that domain errors surface explicitly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import JetDomainError, TaylorJet

VARIABLES = ("x", "y", "z", "u", "v")
FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ValueError):
    pass


class ArityError(ValueError):
    """Expression uses variables the evaluation context does not provide."""


# -- tree ---------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


@dataclass(frozen=True)
class FieldExpr:
    """A parsed scalar field with its source text."""

    root: object
    text: str = ""

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(_collect_vars(self.root))

    def __str__(self) -> str:
        return to_text(self.root)

    def evaluate(self, env: dict):
        """Evaluate with ``env`` mapping variable names to jets, floats or arrays."""
        missing = self.variables - env.keys()
        if missing:
            raise ArityError(f"undefined variable(s): {sorted(missing)}")
        out = _eval(self.root, env)
        vals = out.coeffs if isinstance(out, TaylorJet) else out
        if not np.all(np.isfinite(vals)):
            raise JetDomainError(f"non-finite result evaluating {self}")
        return out


def _collect_vars(node):
    if isinstance(node, Var):
        yield node.name
    elif isinstance(node, (Neg, Call)):
        yield from _collect_vars(node.arg)
    elif isinstance(node, Pow):
        yield from _collect_vars(node.base)
    elif isinstance(node, BinOp):
        yield from _collect_vars(node.left)
        yield from _collect_vars(node.right)


# -- evaluation ---------------------------------------------------------

def _plain(func: str, a):
    a = np.asarray(a, dtype=float)
    if func in ("ln", "sqrt") and np.any(~(a > 0)):
        raise JetDomainError(f"{func} of a non-positive value")
    return {"exp": np.exp, "ln": np.log, "sin": np.sin, "cos": np.cos,
            "sqrt": np.sqrt}[func](a)


_JET_FUNCS = {"exp": jets.exp, "ln": jets.log, "sin": jets.sin, "cos": jets.cos,
              "sqrt": jets.sqrt}


def _eval(node, env):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, BinOp):
        a, b = _eval(node.left, env), _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if isinstance(b, TaylorJet):
            return a / b if isinstance(a, TaylorJet) else jets.reciprocal(b) * a
        if np.any(np.asarray(b) == 0):
            raise JetDomainError("division by zero")
        return a / b
    if isinstance(node, Pow):
        base = _eval(node.base, env)
        if isinstance(base, TaylorJet):
            return jets.integer_power(base, node.exponent)
        base = np.asarray(base, dtype=float)
        if node.exponent < 0 and np.any(base == 0):
            raise JetDomainError("division by zero")
        return base ** node.exponent
    if isinstance(node, Call):
        a = _eval(node.arg, env)
        if isinstance(a, TaylorJet):
            return _JET_FUNCS[node.func](a)
        return _plain(node.func, a)
    raise TypeError(f"not an expression node: {node!r}")


# -- printing -----------------------------------------------------------

def _fmt_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def to_text(node, parent_prec: int = 0, right: bool = False) -> str:
    """Print with the minimum parentheses that reparse to the same tree."""
    if isinstance(node, Const):
        s = _fmt_number(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Pow):
        base = to_text(node.base, 4)
        exp_ = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"{base}^{exp_}"
    if isinstance(node, Neg):
        s = "-" + to_text(node.arg, 3)
        return f"({s})" if parent_prec >= 3 else s
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        s = f"{to_text(node.left, p)}{node.op}{to_text(node.right, p, right=True)}"
        if p < parent_prec or (p == parent_prec and right):
            return f"({s})"
        return s
    raise TypeError(f"not an expression node: {node!r}")


# -- parsing ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m.end() == pos or (m.group(0).strip() == ""):
            break
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("num", m.group(1), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^(),":
                raise ExprSyntaxError(f"unexpected character {ch!r}", start)
            toks.append(("op", ch, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op: str):
        tok = self.take()
        if tok[1] != op or tok[0] != "op":
            raise ExprSyntaxError(f"expected {op!r}", tok[2])

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            node = Pow(node, self.integer())
        return node

    def integer(self) -> int:
        paren = self.peek()[:2] == ("op", "(")
        if paren:
            self.take()
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", tok[2])
        if paren:
            self.expect(")")
        return sign * int(tok[1])

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {text!r} at offset {pos}")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in VARIABLES:
                return Var(text)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            raise UnknownIdentifierError(f"unknown identifier {text!r} at offset {pos}")
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse_field(text: str) -> FieldExpr:
    """Parse expression text into a :class:`FieldExpr`."""
    return FieldExpr(_Parser(text).parse(), text)


def as_field(obj) -> FieldExpr:
    if isinstance(obj, FieldExpr):
        return obj
    if isinstance(obj, (int, float)):
        return FieldExpr(Const(float(obj)), _fmt_number(obj))
    return parse_field(obj)


def default_variables(expr: FieldExpr, num_vars: int) -> tuple[str, ...]:
    if expr.variables & {"u", "v"}:
        if num_vars != 2:
            raise ArityError("chart expressions in (u, v) need num_vars=2")
        return ("u", "v")
    return ("x", "y", "z")[:num_vars]


def jet_eval(expr, point, num_vars: int, order: int, variables=None) -> TaylorJet:
    """Taylor jet of ``expr`` at ``point``.

    ``point`` has shape ``(num_vars,)`` or ``(num_vars,) + batch``.
    """
    expr = as_field(expr)
    names = tuple(variables) if variables else default_variables(expr, num_vars)
    if len(names) != num_vars:
        raise ArityError(f"{num_vars} variables requested, names {names}")
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    if point.shape[0] != num_vars:
        raise ArityError(f"point has {point.shape[0]} components, expected {num_vars}")
    extra = expr.variables - set(names)
    if extra:
        raise ArityError(f"undefined variable(s): {sorted(extra)}")
    env = {n: TaylorJet.variable(point[k], k, num_vars, order) for k, n in enumerate(names)}
    out = expr.evaluate(env)
    if not isinstance(out, TaylorJet):
        out = TaylorJet.constant(np.broadcast_to(out, point.shape[1:]), num_vars, order)
    return out


def plain_eval(expr, point, variables=None) -> np.ndarray:
    """Ordinary float evaluation (used by finite-difference oracles)."""
    expr = as_field(expr)
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    names = tuple(variables) if variables else default_variables(expr, point.shape[0])
    env = {n: point[k] for k, n in enumerate(names)}
    return np.broadcast_to(np.asarray(expr.evaluate(env), dtype=float), point.shape[1:])


# -- tree builders used by the catalogs ---------------------------------

def scale(c: float, e: FieldExpr) -> FieldExpr:
    return FieldExpr(BinOp("*", Const(float(c)), e.root), "")


def ln_of(e: FieldExpr) -> FieldExpr:
    return FieldExpr(Call("ln", e.root), "")
