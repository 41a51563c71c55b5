"""Expression trees over named variables: parsing, evaluation and symbolic derivatives.

Constants are exact rationals. Evaluation stays in :class:`fractions.Fraction`
arithmetic whenever the inputs are rational and no irrational power shows up,
and silently falls back to binary64 otherwise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

Number = Union[Fraction, float]

KINK_TOL = 1e-12


class ParseError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the source text."""

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class UnknownVariable(ParseError):
    pass


class EvaluationError(ArithmeticError):
    pass


class NonSmoothPoint(ArithmeticError):
    """A derivative was requested where an ``abs`` argument is at its kink."""


# --------------------------------------------------------------------------
# AST


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, p):
        return Pow(self, Fraction(p))


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True)
class Abs(Expr):
    arg: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(Fraction(x))


def const(x) -> Const:
    return Const(Fraction(x))


def num_vars(e: Expr) -> int:
    """One more than the largest variable index used (0 for constants)."""
    if isinstance(e, Var):
        return e.index + 1
    if isinstance(e, Const):
        return 0
    return max((num_vars(c) for c in children(e)), default=0)


def children(e: Expr) -> tuple:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (Abs, Neg)):
        return (e.arg,)
    return ()


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", n))
    return out


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _decimal_to_fraction(s: str) -> Fraction:
    # printed digits taken literally: "0.1" is exactly 1/10
    return Fraction(s)


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.names = {name: k for k, name in enumerate(names)}

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None, cls=ParseError):
        tok = tok or self.peek()
        raise cls(msg, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        ops = []
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            ops.append(self.take()[1])
            terms.append(self.term())
        if ops and all(op == "+" for op in ops):
            # pure sums nest to the right: a + b + c -> Add(a, Add(b, c))
            out = terms[-1]
            for t in reversed(terms[:-1]):
                out = Add(t, out)
            return out
        out = terms[0]
        for op, t in zip(ops, terms[1:]):
            out = Add(out, t) if op == "+" else Sub(out, t)
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            if op == "*":
                out = Mul(out, rhs)
            elif isinstance(out, Const) and isinstance(rhs, Const):
                if rhs.value == 0:
                    self.error("division by zero constant")
                out = Const(out.value / rhs.value)
            else:
                out = Div(out, rhs)
        return out

    def factor(self) -> Expr:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            inner = self.factor()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.rational())
        return base

    def _integer(self) -> int:
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            self.error("expected an integer exponent", tok)
        return sign * int(tok[1])

    def rational(self) -> Fraction:
        # a bare "p/q" after "^" is read as division ("x^2/2" is x squared
        # over two); fractional exponents must be parenthesized
        if self.peek()[1] == "(":
            self.take()
            p = self._integer()
            q = 1
            if self.peek()[1] == "/":
                self.take()
                q = self._integer()
            self.expect(")")
        else:
            p = self._integer()
            q = 1
        if q == 0:
            self.error("zero denominator in exponent")
        return Fraction(p, q)

    def atom(self) -> Expr:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Const(_decimal_to_fraction(val))
        if kind == "id":
            if val == "abs" and self.peek()[1] == "(":
                self.take()
                inner = self.expr()
                self.expect(")")
                return Abs(inner)
            if val not in self.names:
                self.error(f"unknown variable {val!r}", tok, UnknownVariable)
            return Var(self.names[val])
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        self.error(f"unexpected token {val or 'end of input'!r}", tok)


def parse(text: str, vars: Sequence[str]) -> Expr:
    """Parse ``text`` over the ordered variable names ``vars``."""
    return _Parser(text, vars).parse()


def _fmt_frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def unparse(e: Expr, vars: Sequence[str]) -> str:
    """Render ``e`` as text; ``parse(unparse(e))`` rebuilds any parser-produced tree."""

    def wrapped(x: Expr) -> str:
        return f"({go(x)})"

    def as_factor(x: Expr) -> str:
        if isinstance(x, (Var, Abs)):
            return go(x)
        if isinstance(x, Const) and x.value >= 0 and x.value.denominator == 1:
            return go(x)
        return wrapped(x)

    def go(x: Expr) -> str:
        if isinstance(x, Const):
            return _fmt_frac(x.value)
        if isinstance(x, Var):
            return vars[x.index]
        if isinstance(x, Abs):
            return f"abs({go(x.arg)})"
        if isinstance(x, Neg):
            return f"-{as_factor(x.arg)}"
        if isinstance(x, Pow):
            p = x.exponent
            ptxt = str(p.numerator) if p.denominator == 1 and p >= 0 else f"({_fmt_frac(p)})"
            return f"{as_factor(x.base)}^{ptxt}"
        if isinstance(x, (Mul, Div)):
            op = "*" if isinstance(x, Mul) else "/"
            left = wrapped(x.left) if isinstance(x.left, (Add, Sub)) else go(x.left)
            if isinstance(x.left, Const) and not (x.left.value >= 0 and x.left.value.denominator == 1):
                left = wrapped(x.left)
            right = go(x.right) if isinstance(x.right, Pow) else as_factor(x.right)
            return f"{left} {op} {right}"
        if isinstance(x, (Add, Sub)):
            op = "+" if isinstance(x, Add) else "-"
            left = wrapped(x.left) if isinstance(x.left, (Add, Sub)) else go(x.left)
            if isinstance(x.right, (Add, Sub, Neg)) or (
                isinstance(x.right, Const) and x.right.value < 0
            ):
                right = wrapped(x.right)
            else:
                right = go(x.right)
            return f"{left} {op} {right}"
        raise TypeError(f"not an expression: {x!r}")

    return go(e)


# --------------------------------------------------------------------------
# Evaluation


def _exact_root(q: Fraction, k: int):
    """k-th root of a nonnegative rational if it is rational, else None."""

    def iroot(n: int):
        if n < 2:
            return n
        r = int(round(n ** (1.0 / k)))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c**k == n:
                return c
        # large integers: Newton on integers
        x = 1 << ((n.bit_length() + k - 1) // k)
        while True:
            y = ((k - 1) * x + n // x ** (k - 1)) // k
            if y >= x:
                break
            x = y
        return x if x**k == n else None

    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _power(base: Number, p: Fraction) -> Number:
    if isinstance(base, Fraction):
        if p.denominator == 1:
            if base == 0 and p < 0:
                raise EvaluationError("division by zero")
            return base ** int(p)
        if base >= 0:
            root = _exact_root(base, p.denominator)
            if root is not None:
                if root == 0 and p < 0:
                    raise EvaluationError("division by zero")
                return root ** p.numerator
        base = float(base)
    if base < 0:
        if p.denominator % 2 == 0:
            raise EvaluationError("even root of a negative number")
        mag = (-base) ** float(p)
        return -mag if p.numerator % 2 else mag
    if base == 0 and p < 0:
        raise EvaluationError("division by zero")
    return base ** float(p)


def _to_number(v) -> Number:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return float(v)


def evaluate(e: Expr, x: Sequence) -> Number:
    """Value of ``e`` at ``x``; a Fraction when the computation stayed rational."""
    xs = [_to_number(v) for v in x]
    n = num_vars(e)
    if n > len(xs):
        raise IndexError(f"expression uses {n} variables, point has {len(xs)}")
    return _eval(e, xs)


def _eval(e: Expr, xs) -> Number:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return xs[e.index]
    if isinstance(e, Add):
        return _eval(e.left, xs) + _eval(e.right, xs)
    if isinstance(e, Sub):
        return _eval(e.left, xs) - _eval(e.right, xs)
    if isinstance(e, Mul):
        return _eval(e.left, xs) * _eval(e.right, xs)
    if isinstance(e, Div):
        den = _eval(e.right, xs)
        if den == 0:
            raise EvaluationError("division by zero")
        return _eval(e.left, xs) / den
    if isinstance(e, Pow):
        return _power(_eval(e.base, xs), e.exponent)
    if isinstance(e, Abs):
        return abs(_eval(e.arg, xs))
    if isinstance(e, Neg):
        return -_eval(e.arg, xs)
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# Symbolic differentiation


def _is_const(e, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def s_add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def s_sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return s_neg(b)
    return Sub(a, b)


def s_neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def s_mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return s_neg(b)
    if _is_const(b, -1):
        return s_neg(a)
    return Mul(a, b)


def s_div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1):
        return a
    if _is_const(a, 0):
        return ZERO
    if _is_const(a) and _is_const(b) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def s_pow(a: Expr, p: Fraction) -> Expr:
    if p == 0:
        return ONE
    if p == 1:
        return a
    if isinstance(a, Const) and p.denominator == 1 and not (a.value == 0 and p < 0):
        return Const(a.value ** int(p))
    return Pow(a, p)


@lru_cache(maxsize=None)
def derivative(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to variable ``i``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return s_add(derivative(e.left, i), derivative(e.right, i))
    if isinstance(e, Sub):
        return s_sub(derivative(e.left, i), derivative(e.right, i))
    if isinstance(e, Mul):
        return s_add(
            s_mul(derivative(e.left, i), e.right), s_mul(e.left, derivative(e.right, i))
        )
    if isinstance(e, Div):
        du, dv = derivative(e.left, i), derivative(e.right, i)
        if _is_const(dv, 0):
            return s_div(du, e.right)
        return s_div(s_sub(s_mul(du, e.right), s_mul(e.left, dv)), s_pow(e.right, Fraction(2)))
    if isinstance(e, Pow):
        du = derivative(e.base, i)
        if _is_const(du, 0):
            return ZERO
        p = e.exponent
        return s_mul(s_mul(Const(p), s_pow(e.base, p - 1)), du)
    if isinstance(e, Abs):
        du = derivative(e.arg, i)
        if _is_const(du, 0):
            return ZERO
        # sign(u) * u' written as u / |u| * u'; only evaluated off the kink
        return s_mul(Div(e.arg, Abs(e.arg)), du)
    if isinstance(e, Neg):
        return s_neg(derivative(e.arg, i))
    raise TypeError(f"not an expression: {e!r}")


def abs_arguments(e: Expr) -> list:
    out = []

    def walk(x):
        if isinstance(x, Abs):
            out.append(x.arg)
        for c in children(x):
            walk(c)

    walk(e)
    return out


def check_smooth(e: Expr, x: Sequence, tol: float = KINK_TOL) -> None:
    """Raise :class:`NonSmoothPoint` if some ``abs`` argument sits at its kink."""
    for arg in abs_arguments(e):
        if abs(float(evaluate(arg, x))) <= tol:
            raise NonSmoothPoint("abs argument within kink tolerance; derivative undefined")


@dataclass
class DiffBundle:
    value: Number
    gradient: list
    hessian: list


def gradient_exprs(e: Expr, n: int) -> list:
    return [derivative(e, i) for i in range(n)]


def hessian_exprs(e: Expr, n: int) -> list:
    g = gradient_exprs(e, n)
    return [[derivative(g[i], j) for j in range(n)] for i in range(n)]


def gradient(e: Expr, x: Sequence) -> list:
    check_smooth(e, x)
    return [evaluate(d, x) for d in gradient_exprs(e, len(x))]


def hessian(e: Expr, x: Sequence) -> list:
    check_smooth(e, x)
    n = len(x)
    g = gradient_exprs(e, n)
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            H[i][j] = H[j][i] = evaluate(derivative(g[i], j), x)
    return H


def second_directional(e: Expr, x: Sequence, u: Sequence) -> Number:
    """``u^T hess(e)(x) u``."""
    H = hessian(e, x)
    u = [_to_number(v) for v in u]
    return quad_form(H, u)


def quad_form(H, u) -> Number:
    n = len(u)
    return sum(u[i] * H[i][j] * u[j] for i in range(n) for j in range(n))


def diff_bundle(e: Expr, x: Sequence) -> DiffBundle:
    return DiffBundle(evaluate(e, x), gradient(e, x), hessian(e, x))


def differentiate(e: Expr, x: Sequence, order: str = "gradient", u: Sequence = None):
    """Dispatch on ``order``: ``"gradient"``, ``"hessian"`` or ``"second_directional"``."""
    if order == "gradient":
        return gradient(e, x)
    if order == "hessian":
        return hessian(e, x)
    if order == "second_directional":
        if u is None:
            raise ValueError("second_directional needs a direction u")
        return second_directional(e, x, u)
    raise ValueError(f"unknown derivative order {order!r}")


# --------------------------------------------------------------------------
# Substitution and exact polynomial shifts


def substitute(e: Expr, mapping: Sequence[Expr]) -> Expr:
    """Replace ``Var(i)`` by ``mapping[i]``."""
    if isinstance(e, Var):
        return mapping[e.index]
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return s_add(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Sub):
        return s_sub(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Mul):
        return s_mul(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Div):
        return s_div(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return s_pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Abs):
        inner = substitute(e.arg, mapping)
        return Const(abs(inner.value)) if isinstance(inner, Const) else Abs(inner)
    if isinstance(e, Neg):
        return s_neg(substitute(e.arg, mapping))
    raise TypeError(f"not an expression: {e!r}")


def to_polynomial(e: Expr, n: int):
    """Exact ``{exponent tuple: Fraction}`` form, or None if ``e`` is not a polynomial."""

    def mul(p, q):
        out = {}
        for a, ca in p.items():
            for b, cb in q.items():
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out.get(k, 0) + ca * cb
        return {k: c for k, c in out.items() if c != 0}

    def add(p, q, sign=1):
        out = dict(p)
        for k, c in q.items():
            out[k] = out.get(k, 0) + sign * c
        return {k: c for k, c in out.items() if c != 0}

    zero = (0,) * n

    def go(x):
        if isinstance(x, Const):
            return {zero: x.value} if x.value != 0 else {}
        if isinstance(x, Var):
            k = [0] * n
            k[x.index] = 1
            return {tuple(k): Fraction(1)}
        if isinstance(x, Add):
            a, b = go(x.left), go(x.right)
            return None if a is None or b is None else add(a, b)
        if isinstance(x, Sub):
            a, b = go(x.left), go(x.right)
            return None if a is None or b is None else add(a, b, -1)
        if isinstance(x, Neg):
            a = go(x.arg)
            return None if a is None else {k: -c for k, c in a.items()}
        if isinstance(x, Mul):
            a, b = go(x.left), go(x.right)
            return None if a is None or b is None else mul(a, b)
        if isinstance(x, Div):
            a, b = go(x.left), go(x.right)
            if a is None or b is None or set(b) - {zero} or not b:
                return None
            c = b[zero]
            return {k: v / c for k, v in a.items()}
        if isinstance(x, Pow):
            p = x.exponent
            if p.denominator != 1 or p < 0:
                return None
            a = go(x.base)
            if a is None:
                return None
            out = {zero: Fraction(1)}
            for _ in range(int(p)):
                out = mul(out, a)
            return out
        return None

    return go(e)


def polynomial_to_expr(poly: dict) -> Expr:
    out = ZERO
    for k in sorted(poly):
        term: Expr = Const(poly[k])
        for i, p in enumerate(k):
            if p:
                term = s_mul(term, s_pow(Var(i), Fraction(p)))
        out = s_add(out, term)
    return out


def shifted(e: Expr, base: Sequence, n: int) -> Expr:
    """Expression for ``y -> e(base + y)``.

    Polynomials are re-expanded exactly around ``base`` so that evaluating the
    result at tiny ``y`` does not cancel the constant part against the rest.
    """
    base = [Fraction(b) for b in base]
    mapping = [s_add(Const(b), Var(i)) for i, b in enumerate(base)]
    sub = substitute(e, mapping)
    poly = to_polynomial(sub, n)
    if poly is not None:
        return polynomial_to_expr(poly)
    return sub


# --------------------------------------------------------------------------
# Vectorized float evaluation


def _np_source(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Add):
        return f"({_np_source(e.left)} + {_np_source(e.right)})"
    if isinstance(e, Sub):
        return f"({_np_source(e.left)} - {_np_source(e.right)})"
    if isinstance(e, Mul):
        return f"({_np_source(e.left)} * {_np_source(e.right)})"
    if isinstance(e, Div):
        return f"({_np_source(e.left)} / {_np_source(e.right)})"
    if isinstance(e, Pow):
        p = e.exponent
        if p.denominator == 1:
            return f"({_np_source(e.base)} ** {int(p)})"
        if p.denominator % 2:
            return f"_oddroot({_np_source(e.base)}, {float(p)!r}, {p.numerator % 2})"
        return f"({_np_source(e.base)} ** {float(p)!r})"
    if isinstance(e, Abs):
        return f"np.abs({_np_source(e.arg)})"
    if isinstance(e, Neg):
        return f"(-{_np_source(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _oddroot(b, p, odd):
    # real branch of b^(a/q) for odd q: the sign survives only for odd a
    mag = np.abs(b) ** p
    return np.sign(b) * mag if odd else mag


@lru_cache(maxsize=None)
def compile_numpy(e: Expr, n: int) -> Callable:
    """Vectorized evaluator ``f(X)`` for ``X`` of shape ``(..., n)``."""
    args = ", ".join(f"x{i}" for i in range(n)) or "_"
    body = _np_source(e)
    ns = {"np": np, "_oddroot": _oddroot}
    code = f"def _f({args}):\n    return {body} + 0.0 * {('x0' if n else '0.0')}\n"
    exec(code, ns)
    fn = ns["_f"]

    def call(X):
        X = np.asarray(X, dtype=float)
        with np.errstate(all="ignore"):
            return fn(*[X[..., i] for i in range(n)]) if n else np.full(X.shape[:-1], fn(0.0))

    return call


@lru_cache(maxsize=None)
def compile_derivatives(e: Expr, n: int):
    """Vectorized (value, gradient, hessian) evaluators."""
    f = compile_numpy(e, n)
    g = [compile_numpy(d, n) for d in gradient_exprs(e, n)]
    H = hessian_exprs(e, n)
    h = [[compile_numpy(H[i][j], n) for j in range(n)] for i in range(n)]

    def grad(X):
        return np.stack([gi(X) for gi in g], axis=-1)

    def hess(X):
        return np.stack([np.stack([hij(X) for hij in row], axis=-1) for row in h], axis=-2)

    return f, grad, hess


def is_rational(v) -> bool:
    return isinstance(v, (Fraction, int))


def to_float_vector(v) -> np.ndarray:
    return np.array([float(c) for c in v], dtype=float)


def frac_vector(v) -> list:
    return [Fraction(c) if not isinstance(c, float) else Fraction(c) for c in v]


def isclose_number(a, b, tol=0.0) -> bool:
    if tol == 0 and is_rational(a) and is_rational(b):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=0, abs_tol=tol)
