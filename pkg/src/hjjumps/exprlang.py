"""Scalar expression language for user-supplied problem functions.

Expressions are parsed by recursive descent with the usual precedence
(``^`` above unary minus above ``*`` ``/`` above ``+`` ``-``), support a
fixed function set (sin, cos, tanh, exp, log, abs, sqrt) and ``^`` with a
constant integer exponent.  Parsed trees are immutable, evaluation is pure
and deterministic, and first derivatives are computed by forward-mode dual
numbers, not finite differences.

Compiled evaluators accept floats, numpy arrays (elementwise) and
:class:`Dual` operands through the same code path, which is what lets the
rest of the package batch trajectory work over many start points at once.
"""

from __future__ import annotations

import functools
import keyword
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ExprDomainError, ExprNameError, ExprSyntaxError

FUNCTIONS = ("sin", "cos", "tanh", "exp", "log", "abs", "sqrt")


# ---------------------------------------------------------------------------
# dual numbers


class Dual:
    """Value/derivative pair propagating exact first derivatives.

    Arithmetic follows the product, quotient and chain rules; ``value`` and
    ``deriv`` may be floats or same-shaped numpy arrays.
    """

    __slots__ = ("value", "deriv")

    # keep numpy from absorbing Dual operands into object arrays
    __array_ufunc__ = None

    def __init__(self, value, deriv):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.deriv + self.deriv * other.value,
            )
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value / other.value,
                (self.deriv * other.value - self.value * other.deriv)
                / (other.value * other.value),
            )
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        return Dual(
            other / self.value, -other * self.deriv / (self.value * self.value)
        )

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __pow__(self, k: int):
        if k == 0:
            return Dual(self.value**0, 0.0 * self.deriv)
        return Dual(self.value**k, k * self.value ** (k - 1) * self.deriv)

    def __abs__(self):
        return Dual(np.abs(self.value), np.sign(self.value) * self.deriv)

    # -- elementary functions -----------------------------------------------

    def sin(self):
        return Dual(np.sin(self.value), np.cos(self.value) * self.deriv)

    def cos(self):
        return Dual(np.cos(self.value), -np.sin(self.value) * self.deriv)

    def tanh(self):
        t = np.tanh(self.value)
        return Dual(t, (1.0 - t * t) * self.deriv)

    def exp(self):
        e = np.exp(self.value)
        return Dual(e, e * self.deriv)

    def log(self):
        return Dual(np.log(self.value), self.deriv / self.value)

    def sqrt(self):
        r = np.sqrt(self.value)
        return Dual(r, self.deriv / (2.0 * r))


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Expr"
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    lhs: "Expr"
    rhs: "Expr"
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Power:
    base: "Expr"
    exponent: int
    pos: int = field(compare=False, default=0)


Expr = Const | Var | Unary | Binary | Power


def free_variables(expr: Expr) -> set[str]:
    match expr:
        case Const():
            return set()
        case Var(name):
            return {name}
        case Unary(_, arg):
            return free_variables(arg)
        case Binary(_, lhs, rhs):
            return free_variables(lhs) | free_variables(rhs)
        case Power(base, _):
            return free_variables(base)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _lex(source: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            stripped = source[i:].lstrip()
            if not stripped:
                break
            bad_pos = len(source) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", bad_pos)
        if m.group("num") is not None:
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(_Token("name", m.group("name"), m.start("name")))
        else:
            tokens.append(_Token("op", m.group("op"), m.start("op")))
        i = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.source = source
        self.variables = tuple(variables)
        self.tokens = _lex(source)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(f"expected {text!r}", tok.pos)
        return self.advance()

    # grammar: sum -> term (("+"|"-") term)*
    #          term -> unary (("*"|"/") unary)*
    #          unary -> "-" unary | power
    #          power -> atom ("^" ["-"] INT)*
    #          atom -> NUM | NAME | NAME "(" sum ")" | "(" sum ")"

    def parse(self) -> Expr:
        expr = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r} after expression", tok.pos)
        return expr

    def sum(self) -> Expr:
        expr = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            tok = self.advance()
            rhs = self.term()
            expr = Binary(tok.text, expr, rhs, tok.pos)
        return expr

    def term(self) -> Expr:
        expr = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            tok = self.advance()
            rhs = self.unary()
            expr = Binary(tok.text, expr, rhs, tok.pos)
        return expr

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Unary("neg", self.unary(), tok.pos)
        return self.power()

    def power(self) -> Expr:
        expr = self.atom()
        while self.peek().kind == "op" and self.peek().text == "^":
            tok = self.advance()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.advance()
                sign = -1
            etok = self.peek()
            if etok.kind != "num" or not re.fullmatch(r"\d+", etok.text):
                raise ExprSyntaxError("exponent must be a constant integer", etok.pos)
            self.advance()
            expr = Power(expr, sign * int(etok.text), tok.pos)
        return expr

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise ExprNameError(f"unknown function {tok.text!r}", tok.pos)
                self.advance()
                arg = self.sum()
                self.expect_op(")")
                return Unary(tok.text, arg, tok.pos)
            if tok.text not in self.variables:
                raise ExprNameError(f"unknown variable {tok.text!r}", tok.pos)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            expr = self.sum()
            self.expect_op(")")
            return expr
        raise ExprSyntaxError("expected a number, variable or '('", tok.pos)


def parse(source: str, variables: Sequence[str]) -> Expr:
    """Parse ``source`` into an expression tree over the declared variables."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    for name in variables:
        if not name.isidentifier() or keyword.iskeyword(name) or name in FUNCTIONS:
            raise ValueError(f"illegal variable name {name!r}")
    return _Parser(source, variables).parse()


# ---------------------------------------------------------------------------
# printing

_PREC_SUM, _PREC_TERM, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _node_prec(expr: Expr) -> int:
    match expr:
        case Binary(op, _, _):
            return _PREC_SUM if op in "+-" else _PREC_TERM
        case Unary("neg", _):
            return _PREC_UNARY
        case Unary(_, _):
            return _PREC_ATOM  # function call carries its own parentheses
        case Power(_, _):
            return _PREC_POW
    return _PREC_ATOM


def to_source(expr: Expr) -> str:
    """Render a tree back to parseable source; reparsing yields an equal tree."""

    def wrap(child: Expr, minimum: int) -> str:
        text = to_source(child)
        if _node_prec(child) < minimum:
            return f"({text})"
        return text

    match expr:
        case Const(value):
            return repr(float(value))
        case Var(name):
            return name
        case Unary("neg", arg):
            return f"-{wrap(arg, _PREC_UNARY)}"
        case Unary(op, arg):
            return f"{op}({to_source(arg)})"
        case Binary(op, lhs, rhs):
            prec = _node_prec(expr)
            # right side needs one level more so a − (b − c) keeps its shape
            return f"{wrap(lhs, prec)} {op} {wrap(rhs, prec + 1)}"
        case Power(base, exponent):
            return f"{wrap(base, _PREC_ATOM)}^{exponent}"
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# compilation and evaluation

def _fn_sin(x):
    return x.sin() if isinstance(x, Dual) else np.sin(x)


def _fn_cos(x):
    return x.cos() if isinstance(x, Dual) else np.cos(x)


def _fn_tanh(x):
    return x.tanh() if isinstance(x, Dual) else np.tanh(x)


def _fn_exp(x):
    return x.exp() if isinstance(x, Dual) else np.exp(x)


def _fn_abs(x):
    return abs(x) if isinstance(x, Dual) else np.abs(x)


def _raw(x):
    return x.value if isinstance(x, Dual) else x


def _fn_log(x, pos):
    if np.any(_raw(x) <= 0.0):
        raise ExprDomainError("log of a nonpositive value", pos)
    return x.log() if isinstance(x, Dual) else np.log(x)


def _fn_sqrt(x, pos):
    if np.any(_raw(x) < 0.0):
        raise ExprDomainError("sqrt of a negative value", pos)
    return x.sqrt() if isinstance(x, Dual) else np.sqrt(x)


def _fn_div(a, b, pos):
    if np.any(_raw(b) == 0.0):
        raise ExprDomainError("division by zero", pos)
    return a / b


def _fn_powi(b, k, pos):
    if k < 0 and np.any(_raw(b) == 0.0):
        raise ExprDomainError("zero raised to a negative power", pos)
    if isinstance(b, Dual):
        return b**k
    return np.asarray(b, dtype=float) ** k if isinstance(b, np.ndarray) else float(b) ** k


_NAMESPACE = {
    "_sin": _fn_sin,
    "_cos": _fn_cos,
    "_tanh": _fn_tanh,
    "_exp": _fn_exp,
    "_abs": _fn_abs,
    "_log": _fn_log,
    "_sqrt": _fn_sqrt,
    "_div": _fn_div,
    "_powi": _fn_powi,
}


def _emit(expr: Expr) -> str:
    match expr:
        case Const(value):
            return repr(float(value))
        case Var(name):
            return name
        case Unary("neg", arg):
            return f"(-{_emit(arg)})"
        case Unary(op, arg, pos):
            if op in ("log", "sqrt"):
                return f"_{op}({_emit(arg)}, {pos})"
            return f"_{op}({_emit(arg)})"
        case Binary("/", lhs, rhs, pos):
            return f"_div({_emit(lhs)}, {_emit(rhs)}, {pos})"
        case Binary(op, lhs, rhs):
            return f"({_emit(lhs)} {op} {_emit(rhs)})"
        case Power(base, exponent, pos):
            return f"_powi({_emit(base)}, {exponent}, {pos})"
    raise TypeError(f"not an expression node: {expr!r}")


@dataclass(frozen=True)
class CompiledExpr:
    """A parsed expression bound to a positional argument order."""

    expr: Expr
    variables: tuple[str, ...]
    fn: Callable = field(compare=False, repr=False)

    def __call__(self, *args):
        return self.fn(*args)


@functools.lru_cache(maxsize=512)
def compile_expr(expr: Expr, variables: tuple[str, ...]) -> CompiledExpr:
    """Compile to a plain Python function with one positional arg per variable."""
    missing = free_variables(expr) - set(variables)
    if missing:
        raise ExprNameError(f"unbound variable {sorted(missing)[0]!r}")
    args = ", ".join(variables) if variables else ""
    src = f"def _compiled({args}):\n    return {_emit(expr)}\n"
    scope = dict(_NAMESPACE)
    exec(compile(src, "<expr>", "exec"), scope)
    return CompiledExpr(expr=expr, variables=variables, fn=scope["_compiled"])


def evaluate(expr: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate at a point; every free variable must be bound."""
    names = tuple(sorted(bindings))
    compiled = compile_expr(expr, names)
    result = compiled(*(float(bindings[n]) for n in names))
    return float(result)


def evaluate_with_derivative(
    expr: Expr, bindings: Mapping[str, float], seed: str
) -> tuple[float, float]:
    """Evaluate value and d(value)/d(seed) in one dual-number pass."""
    if seed not in bindings:
        raise ExprNameError(f"seed variable {seed!r} is not bound")
    names = tuple(sorted(bindings))
    compiled = compile_expr(expr, names)
    args = [
        Dual(float(bindings[n]), 1.0) if n == seed else float(bindings[n])
        for n in names
    ]
    result = compiled(*args)
    if isinstance(result, Dual):
        return float(result.value), float(result.deriv)
    return float(result), 0.0


def batch_value(compiled: CompiledExpr, args: Iterable, shape) -> np.ndarray:
    """Call a compiled expression on array args, broadcasting constants."""
    out = compiled.fn(*args)
    return np.broadcast_to(np.asarray(out, dtype=float), shape)


def batch_value_and_deriv(
    compiled: CompiledExpr, args: Sequence, seed_index: int, shape
) -> tuple[np.ndarray, np.ndarray]:
    """Vector variant of :func:`evaluate_with_derivative` over array bindings."""
    dual_args = list(args)
    dual_args[seed_index] = Dual(np.asarray(args[seed_index], dtype=float), 1.0)
    out = compiled.fn(*dual_args)
    if isinstance(out, Dual):
        value, deriv = out.value, out.deriv
    else:
        value, deriv = out, 0.0
    return (
        np.broadcast_to(np.asarray(value, dtype=float), shape),
        np.broadcast_to(np.asarray(deriv, dtype=float), shape),
    )
