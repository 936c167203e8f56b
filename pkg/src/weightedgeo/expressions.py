"""Scalar-field expression language: parsing, evaluation, symbolic differentiation.

Grammar (EBNF, also documented in the README):

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

Supported functions: sin cos tan exp log sinh cosh tanh sqrt abs.
Constants: pi, e.  Any other identifier is a free variable (a chart
coordinate).  "^" is right associative and binds tighter than unary minus,
so -x^2 parses as -(x^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownIdentifierError",
    "EvaluationDomainError",
    "Expr",
    "Num",
    "Var",
    "Call",
    "External",
    "parse_expression",
    "ScalarField",
    "parse_scalar_field",
]


class ExpressionError(Exception):
    """Base class for expression-language failures."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, known: tuple[str, ...] = ()):
        msg = f"unknown identifier {name!r}"
        if known:
            msg += f"; known variables: {', '.join(known)}"
        super().__init__(msg)
        self.name = name


class EvaluationDomainError(ExpressionError):
    def __init__(self, message: str, point: dict | None = None):
        if point:
            message += f" at point {point}"
        super().__init__(message)
        self.point = point


# ---------------------------------------------------------------------------
# AST


class Expr:
    """Base expression node.  Nodes are immutable and hashable by identity."""

    def evaluate(self, env: dict) -> float:
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def variables(self) -> set[str]:
        out: set[str] = set()
        self._collect(out)
        return out

    def _collect(self, out: set[str]) -> None:
        pass

    def pretty(self) -> str:
        return self._fmt(0)

    def _fmt(self, prec: int) -> str:
        raise NotImplementedError

    # Arithmetic helpers so internal code can assemble trees naturally.
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return Pow(self, as_expr(other))

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, var):
        return Num(0.0)

    def _fmt(self, prec):
        if self.value < 0:
            s = repr(self.value)
            return f"({s})" if prec > 2 else s
        if self.value == math.floor(self.value) and abs(self.value) < 1e16:
            return repr(int(self.value))
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnknownIdentifierError(self.name, tuple(env)) from None

    def diff(self, var):
        return Num(1.0) if var == self.name else Num(0.0)

    def _collect(self, out):
        out.add(self.name)

    def _fmt(self, prec):
        return self.name


@dataclass(frozen=True)
class Binary(Expr):
    left: Expr
    right: Expr

    op = "?"
    precedence = 0

    def _collect(self, out):
        self.left._collect(out)
        self.right._collect(out)

    def _fmt(self, prec):
        # right operand printed at precedence+1 for left-associative ops
        s = f"{self.left._fmt(self.precedence)} {self.op} {self.right._fmt(self.precedence + 1)}"
        return f"({s})" if prec > self.precedence else s


class Add(Binary):
    op, precedence = "+", 1

    def evaluate(self, env):
        return self.left.evaluate(env) + self.right.evaluate(env)

    def diff(self, var):
        return add(self.left.diff(var), self.right.diff(var))


class Sub(Binary):
    op, precedence = "-", 1

    def evaluate(self, env):
        return self.left.evaluate(env) - self.right.evaluate(env)

    def diff(self, var):
        return sub(self.left.diff(var), self.right.diff(var))


class Mul(Binary):
    op, precedence = "*", 2

    def evaluate(self, env):
        return self.left.evaluate(env) * self.right.evaluate(env)

    def diff(self, var):
        return add(mul(self.left.diff(var), self.right),
                   mul(self.left, self.right.diff(var)))


class Div(Binary):
    op, precedence = "/", 2

    def evaluate(self, env):
        denom = self.right.evaluate(env)
        if denom == 0.0:
            raise EvaluationDomainError("division by zero", dict(env))
        return self.left.evaluate(env) / denom

    def diff(self, var):
        return div(sub(mul(self.left.diff(var), self.right),
                       mul(self.left, self.right.diff(var))),
                   Pow(self.right, Num(2.0)))


class Pow(Binary):
    op, precedence = "^", 4

    def evaluate(self, env):
        base = self.left.evaluate(env)
        expo = self.right.evaluate(env)
        if base == 0.0 and expo < 0:
            raise EvaluationDomainError("zero raised to a negative power", dict(env))
        if base < 0 and expo != math.floor(expo):
            raise EvaluationDomainError(
                f"negative base {base!r} with non-integer exponent", dict(env))
        return base ** expo

    def diff(self, var):
        # d(u^c) = c u^(c-1) u'   when the exponent is constant,
        # otherwise the general exp/log form.
        if isinstance(self.right, Num):
            c = self.right.value
            return mul(mul(Num(c), Pow(self.left, Num(c - 1.0))), self.left.diff(var))
        return mul(self, add(mul(self.right.diff(var), Call("log", self.left)),
                             mul(self.right, div(self.left.diff(var), self.left))))

    def _fmt(self, prec):
        s = f"{self.left._fmt(self.precedence + 1)} ^ {self.right._fmt(self.precedence)}"
        return f"({s})" if prec > self.precedence else s


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    precedence = 3

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def diff(self, var):
        return neg(self.arg.diff(var))

    def _collect(self, out):
        self.arg._collect(out)

    def _fmt(self, prec):
        s = f"-{self.arg._fmt(self.precedence)}"
        return f"({s})" if prec > self.precedence else s


def _safe_log(x, env):
    if x <= 0:
        raise EvaluationDomainError(f"log of non-positive value {x!r}", env)
    return math.log(x)


def _safe_sqrt(x, env):
    if x < 0:
        raise EvaluationDomainError(f"sqrt of negative value {x!r}", env)
    return math.sqrt(x)


def _safe_tan(x, env):
    c = math.cos(x)
    if c == 0.0:
        raise EvaluationDomainError(f"tan singularity at {x!r}", env)
    return math.tan(x)


_FUNCTIONS: dict[str, Callable[[float, dict], float]] = {
    "sin": lambda x, env: math.sin(x),
    "cos": lambda x, env: math.cos(x),
    "tan": _safe_tan,
    "exp": lambda x, env: math.exp(x),
    "log": _safe_log,
    "sinh": lambda x, env: math.sinh(x),
    "cosh": lambda x, env: math.cosh(x),
    "tanh": lambda x, env: math.tanh(x),
    "sqrt": _safe_sqrt,
    "abs": lambda x, env: abs(x),
}

# derivative of fn(u) with respect to u, as an expression builder
_DERIVATIVES: dict[str, Callable[[Expr], Expr]] = {
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: neg(Call("sin", u)),
    "tan": lambda u: div(Num(1.0), Pow(Call("cos", u), Num(2.0))),
    "exp": lambda u: Call("exp", u),
    "log": lambda u: div(Num(1.0), u),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "tanh": lambda u: sub(Num(1.0), Pow(Call("tanh", u), Num(2.0))),
    "sqrt": lambda u: div(Num(0.5), Call("sqrt", u)),
    "abs": lambda u: div(u, Call("abs", u)),
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def evaluate(self, env):
        return _FUNCTIONS[self.fn](self.arg.evaluate(env), dict(env))

    def diff(self, var):
        return mul(_DERIVATIVES[self.fn](self.arg), self.arg.diff(var))

    def _collect(self, out):
        self.arg._collect(out)

    def _fmt(self, prec):
        return f"{self.fn}({self.arg._fmt(0)})"


@dataclass(frozen=True)
class External(Expr):
    """Numerically-defined unary function with a known analytic derivative.

    Used for quantities like the reparametrization integral s(r) of a
    rigidity metric: s itself is an interpolant but ds/dr has a closed form.
    `derivative` maps the argument expression to the derivative expression
    f'(arg); the chain rule supplies arg'.  Not produced by the parser and
    not round-trippable through pretty().
    """

    label: str
    fn: Callable[[float], float] = field(compare=False)
    derivative: Callable[[Expr], Expr] = field(compare=False)
    arg: Expr = field(default_factory=lambda: Var("r"))

    def evaluate(self, env):
        return float(self.fn(self.arg.evaluate(env)))

    def diff(self, var):
        return mul(self.derivative(self.arg), self.arg.diff(var))

    def _collect(self, out):
        self.arg._collect(out)

    def _fmt(self, prec):
        return f"{self.label}({self.arg._fmt(0)})"


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Num(float(x))


# Folding constructors keep derivative trees small.

def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and a.value == 0.0:
        return b
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(a, Num) and a.value == 0.0:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num):
        if a.value == 0.0:
            return Num(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Num):
        if b.value == 0.0:
            return Num(0.0)
        if b.value == 1.0:
            return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and a.value == 0.0:
        return Num(0.0)
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_OPS = set("+-*/^()")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "end"
    text: str
    offset: int


def _tokenize(source: str) -> Iterator[_Token]:
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _TOKEN_OPS:
            yield _Token("op", c, i)
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            # exponent part
            if j < n and source[j] in "eE" and j + 1 < n and (
                    source[j + 1].isdigit() or (source[j + 1] in "+-" and j + 2 < n and source[j + 2].isdigit())):
                j += 2
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ExpressionSyntaxError(f"malformed number {text!r}", i)
            yield _Token("num", text, i)
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            yield _Token("ident", source[i:j], i)
            i = j
            continue
        raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
    yield _Token("end", "", n)


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = list(_tokenize(source))
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.next()
        if tok.kind != "op" or tok.text != op:
            raise ExpressionSyntaxError(f"expected {op!r}, found {tok.text!r}", tok.offset)

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            if self.peek().kind == "op" and self.peek().text == "(":
                if tok.text not in _FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {tok.text!r}", tok.offset)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            if tok.text in _CONSTANTS:
                return Num(_CONSTANTS[tok.text])
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExpressionSyntaxError(f"unexpected token {tok.text!r}", tok.offset)


def parse_expression(source: str) -> Expr:
    return _Parser(source).parse()


_COMPILED_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "sqrt": math.sqrt,
    "abs": abs,
}


def compile_expr(expr: Expr, variables: tuple[str, ...]) -> Callable:
    """Compile to a closure over a positional coordinate array.

    Domain failures surface as ValueError/ZeroDivisionError from the math
    layer; hot paths that need decorated errors should use evaluate().
    """
    if isinstance(expr, Num):
        v = expr.value
        return lambda p: v
    if isinstance(expr, Var):
        idx = variables.index(expr.name)
        return lambda p: p[idx]
    if isinstance(expr, Neg):
        arg = compile_expr(expr.arg, variables)
        return lambda p: -arg(p)
    if isinstance(expr, Call):
        fn = _COMPILED_FUNCS[expr.fn]
        arg = compile_expr(expr.arg, variables)
        return lambda p: fn(arg(p))
    if isinstance(expr, External):
        fn = expr.fn
        arg = compile_expr(expr.arg, variables)
        return lambda p: fn(arg(p))
    left = compile_expr(expr.left, variables)
    right = compile_expr(expr.right, variables)
    if isinstance(expr, Add):
        return lambda p: left(p) + right(p)
    if isinstance(expr, Sub):
        return lambda p: left(p) - right(p)
    if isinstance(expr, Mul):
        return lambda p: left(p) * right(p)
    if isinstance(expr, Div):
        return lambda p: left(p) / right(p)
    if isinstance(expr, Pow):
        return lambda p: left(p) ** right(p)
    raise TypeError(f"cannot compile {type(expr).__name__}")


def substitute(expr: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace variables by expressions (used for coordinate renaming)."""
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Num):
        return expr
    if isinstance(expr, Neg):
        return Neg(substitute(expr.arg, mapping))
    if isinstance(expr, Call):
        return Call(expr.fn, substitute(expr.arg, mapping))
    if isinstance(expr, External):
        return External(expr.label, expr.fn, expr.derivative, substitute(expr.arg, mapping))
    if isinstance(expr, Binary):
        return type(expr)(substitute(expr.left, mapping), substitute(expr.right, mapping))
    raise TypeError(f"cannot substitute into {type(expr).__name__}")


# ---------------------------------------------------------------------------
# Scalar fields


class ScalarField:
    """A scalar function of named chart coordinates with symbolic derivatives.

    Evaluation is deterministic and pure.  First and second partials are
    derived symbolically and cached; they match central finite differences
    on the interior of the domain (see the test suite).
    """

    def __init__(self, expr: Expr, variables: tuple[str, ...], source: str | None = None):
        self.expr = expr
        self.variables = tuple(variables)
        self.source = source
        self._grad: dict[str, Expr] = {}
        self._hess: dict[tuple[str, str], Expr] = {}
        self._c_val: Callable | None = None
        self._c_grad: list[Callable] | None = None
        self._c_hess: list[list[Callable]] | None = None

    @classmethod
    def constant(cls, value: float, variables: tuple[str, ...] = ()) -> "ScalarField":
        return cls(Num(float(value)), variables, source=repr(float(value)))

    @classmethod
    def zero(cls, variables: tuple[str, ...] = ()) -> "ScalarField":
        return cls(Num(0.0), variables, source="0")

    def bind(self, variables: tuple[str, ...]) -> "ScalarField":
        """Re-declare the variable order (e.g. to a chart's coordinates)."""
        free = self.expr.variables()
        missing = free.difference(variables)
        if missing:
            raise UnknownIdentifierError(sorted(missing)[0], tuple(variables))
        return ScalarField(self.expr, tuple(variables), self.source)

    def env(self, point) -> dict:
        return dict(zip(self.variables, (float(x) for x in point)))

    def __call__(self, point) -> float:
        if self._c_val is None:
            self._c_val = compile_expr(self.expr, self.variables)
        try:
            return self._c_val(point)
        except (ValueError, ZeroDivisionError, OverflowError):
            # re-evaluate interpretively for a decorated domain error
            return self.expr.evaluate(self.env(point))

    def partial(self, var: str) -> Expr:
        if var not in self._grad:
            self._grad[var] = self.expr.diff(var)
        return self._grad[var]

    def gradient(self, point) -> np.ndarray:
        if self._c_grad is None:
            self._c_grad = [compile_expr(self.partial(v), self.variables)
                            for v in self.variables]
        try:
            return np.array([c(point) for c in self._c_grad])
        except (ValueError, ZeroDivisionError, OverflowError):
            env = self.env(point)
            return np.array([self.partial(v).evaluate(env) for v in self.variables])

    def second(self, v1: str, v2: str) -> Expr:
        key = (v1, v2) if v1 <= v2 else (v2, v1)
        if key not in self._hess:
            self._hess[key] = self.partial(key[0]).diff(key[1])
        return self._hess[key]

    def hessian(self, point) -> np.ndarray:
        n = len(self.variables)
        if self._c_hess is None:
            self._c_hess = [[compile_expr(self.second(self.variables[i], self.variables[j]),
                                          self.variables)
                             for j in range(n)] for i in range(n)]
        out = np.empty((n, n))
        try:
            for i in range(n):
                for j in range(i, n):
                    out[i, j] = out[j, i] = self._c_hess[i][j](point)
        except (ValueError, ZeroDivisionError, OverflowError):
            env = self.env(point)
            for i in range(n):
                for j in range(i, n):
                    out[i, j] = out[j, i] = self.second(
                        self.variables[i], self.variables[j]).evaluate(env)
        return out

    def pretty(self) -> str:
        return self.expr.pretty()

    def __repr__(self):
        return f"ScalarField({self.pretty()!r}, vars={self.variables})"


def parse_scalar_field(source: str, variables: tuple[str, ...] | None = None) -> ScalarField:
    """Parse `source` into a ScalarField.

    When `variables` is given, every free identifier must be among them;
    otherwise the free identifiers, sorted, become the variables.
    """
    expr = parse_expression(source)
    free = expr.variables()
    if variables is None:
        variables = tuple(sorted(free))
    else:
        unknown = free.difference(variables)
        if unknown:
            raise UnknownIdentifierError(sorted(unknown)[0], tuple(variables))
    return ScalarField(expr, tuple(variables), source)
