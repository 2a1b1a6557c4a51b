"""Small immutable symbolic expression kernel.

Nodes: exact rational / float constants, symbols, n-ary sums and products,
powers, and the unary functions exp, log, sqrt, sin, cos, tan, cot, csc,
sinh, cosh, tanh.  Supported operations: parsing, precedence-aware
formatting, float evaluation, exact rational evaluation (where possible),
symbolic differentiation, substitution, and local simplification
(constant folding, flattening, like-term/like-factor collection).

Simplification is deliberately local: it never applies trig identities or
expands products, and it never converts an exact rational constant into a
float.  Equality of expressions is structural; semantic equality is
decided by the pointwise sampling oracle `pointwise_equal`.

Trees are immutable and hash-consed light: every node carries a
deterministic structural hash computed at construction, so dict lookups
and equality short-circuits are O(1).  Derivatives of shared subtrees are
shared, which keeps the generated evaluators (see `compile_fn`) compact.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Expr", "Const", "Sym", "Add", "Mul", "Pow", "Call",
    "ExprError", "ParseError", "EvalError", "ExactnessError",
    "con", "sym", "add", "mul", "pow_", "call",
    "exp", "log", "sqrt", "sin", "cos", "tan", "cot", "csc",
    "sinh", "cosh", "tanh",
    "parse", "format_expr", "evaluate", "evaluate_exact",
    "diff", "substitute", "substitute_map", "simplify",
    "free_symbols", "compile_fn", "pointwise_equal",
    "FUNCTIONS",
]

# deep derivative trees can exceed the default interpreter limit
sys.setrecursionlimit(max(sys.getrecursionlimit(), 50_000))

Number = Union[int, float, Fraction]

FUNCTIONS = (
    "exp", "log", "sqrt", "sin", "cos", "tan", "cot", "csc",
    "sinh", "cosh", "tanh",
)


class ExprError(Exception):
    """Base class for expression kernel errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    """Unbound symbol or domain violation, reported with the subexpression."""

    def __init__(self, message: str, node: "Expr | None" = None):
        if node is not None:
            message = f"{message} in `{format_expr(node)}`"
        super().__init__(message)
        self.node = node


class ExactnessError(ExprError):
    """Raised when exact rational evaluation is impossible."""


_MASK = (1 << 64) - 1


def _mix(*parts: int) -> int:
    # splitmix64-style deterministic combiner; independent of PYTHONHASHSEED
    h = 0x9E3779B97F4A7C15
    for p in parts:
        p &= _MASK
        p = (p ^ (p >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        p = (p ^ (p >> 27)) * 0x94D049BB133111EB & _MASK
        h = (h * 0x2545F4914F6CDD1D + (p ^ (p >> 31))) & _MASK
    return h


def _str_hash(s: str) -> int:
    h = 0xCBF29CE484222325
    for ch in s.encode():
        h = ((h ^ ch) * 0x100000001B3) & _MASK
    return h


class Expr:
    __slots__ = ("shash",)

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, pow_(other, -1))

    def __rtruediv__(self, other):
        return mul(other, pow_(self, -1))

    def __pow__(self, other):
        return pow_(self, other)

    def __neg__(self):
        return mul(-1, self)

    def __hash__(self):
        return self.shash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        if self.shash != other.shash:
            return False
        return _struct_eq(self, other)

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __repr__(self):
        return f"<Expr {format_expr(self)}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        if isinstance(value, bool):
            raise TypeError("bool is not a number")
        if isinstance(value, int):
            value = Fraction(value)
        elif isinstance(value, float):
            if value == -0.0:
                value = 0.0
        elif not isinstance(value, Fraction):
            raise TypeError(f"unsupported constant type {type(value)!r}")
        object.__setattr__(self, "value", value)
        if isinstance(value, Fraction):
            h = _mix(1, hash(value.numerator), hash(value.denominator))
        else:
            h = _mix(2, int.from_bytes(
                np.float64(value).tobytes(), "little", signed=False))
        object.__setattr__(self, "shash", h)

    def __setattr__(self, *a):
        raise AttributeError("Const is immutable")

    @property
    def is_rational(self) -> bool:
        return isinstance(self.value, Fraction)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not name or not (name[0].isalpha() or name[0] == "_"):
            raise ValueError(f"bad symbol name {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "shash", _mix(3, _str_hash(name)))

    def __setattr__(self, *a):
        raise AttributeError("Sym is immutable")


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "shash", _mix(4, *[t.shash for t in terms]))

    def __setattr__(self, *a):
        raise AttributeError("Add is immutable")


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "shash", _mix(5, *[f.shash for f in factors]))

    def __setattr__(self, *a):
        raise AttributeError("Mul is immutable")


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Expr):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "shash", _mix(6, base.shash, exponent.shash))

    def __setattr__(self, *a):
        raise AttributeError("Pow is immutable")


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "shash", _mix(7, _str_hash(fn), arg.shash))

    def __setattr__(self, *a):
        raise AttributeError("Call is immutable")


def _struct_eq(a: Expr, b: Expr) -> bool:
    if a is b:
        return True
    if type(a) is not type(b) or a.shash != b.shash:
        return False
    if isinstance(a, Const):
        # 1 == 1.0 in Python; keep exact and float constants distinct
        return type(a.value) is type(b.value) and a.value == b.value
    if isinstance(a, Sym):
        return a.name == b.name
    if isinstance(a, Add):
        return len(a.terms) == len(b.terms) and all(
            _struct_eq(x, y) for x, y in zip(a.terms, b.terms))
    if isinstance(a, Mul):
        return len(a.factors) == len(b.factors) and all(
            _struct_eq(x, y) for x, y in zip(a.factors, b.factors))
    if isinstance(a, Pow):
        return _struct_eq(a.base, b.base) and _struct_eq(a.exponent, b.exponent)
    if isinstance(a, Call):
        return a.fn == b.fn and _struct_eq(a.arg, b.arg)
    raise TypeError(type(a))


# ---------------------------------------------------------------------
# smart constructors: light normalization only (flattening, identity and
# exact-constant folding); full rules live in simplify()

ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))


def con(v: Number) -> Const:
    return v if isinstance(v, Const) else Const(v)


def sym(name: str) -> Sym:
    return Sym(name)


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, Fraction)):
        return Const(v)
    if isinstance(v, str):
        return Sym(v)
    raise TypeError(f"cannot coerce {v!r} to Expr")


def _const_add(a: Number, b: Number) -> Number:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return float(a) + float(b)


def _const_mul(a: Number, b: Number) -> Number:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return float(a) * float(b)


def add(*parts) -> Expr:
    terms: list[Expr] = []
    const: Number = Fraction(0)
    for p in parts:
        e = _as_expr(p)
        stack = [e]
        while stack:
            t = stack.pop()
            if isinstance(t, Add):
                stack.extend(reversed(t.terms))
            elif isinstance(t, Const):
                const = _const_add(const, t.value)
            else:
                terms.append(t)
    if const != 0 or not terms:
        # keep the folded constant in front: reads naturally and is stable
        terms.insert(0, Const(const))
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def mul(*parts) -> Expr:
    factors: list[Expr] = []
    const: Number = Fraction(1)
    for p in parts:
        e = _as_expr(p)
        stack = [e]
        while stack:
            f = stack.pop()
            if isinstance(f, Mul):
                stack.extend(reversed(f.factors))
            elif isinstance(f, Const):
                const = _const_mul(const, f.value)
            else:
                factors.append(f)
    if const == 0 and isinstance(const, Fraction):
        return ZERO
    if const != 1 or not factors:
        factors.insert(0, Const(const))
    if len(factors) == 1:
        return factors[0]
    return Mul(tuple(factors))


_FOLD_POW_LIMIT = 16


def pow_(base, exponent) -> Expr:
    b = _as_expr(base)
    e = _as_expr(exponent)
    if isinstance(e, Const) and e.is_rational:
        ev = e.value
        if ev == 0:
            return ONE
        if ev == 1:
            return b
        if isinstance(b, Const) and b.is_rational:
            bv = b.value
            if bv == 1:
                return ONE
            if bv == 0 and ev > 0:
                return ZERO
            if ev.denominator == 1 and abs(ev) <= _FOLD_POW_LIMIT and bv != 0:
                return Const(bv ** int(ev))
    return Pow(b, e)


def call(fn: str, arg) -> Expr:
    return Call(fn, _as_expr(arg))


def exp(a):
    return call("exp", a)


def log(a):
    return call("log", a)


def sqrt(a):
    return call("sqrt", a)


def sin(a):
    return call("sin", a)


def cos(a):
    return call("cos", a)


def tan(a):
    return call("tan", a)


def cot(a):
    return call("cot", a)


def csc(a):
    return call("csc", a)


def sinh(a):
    return call("sinh", a)


def cosh(a):
    return call("cosh", a)


def tanh(a):
    return call("tanh", a)


# ---------------------------------------------------------------------
# parsing

_WS = " \t\r\n"
_DIGITS = "0123456789"


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tok: tuple[str, str, int] | None = None  # (kind, value, offset)
        self._advance()

    def _advance(self):
        t, n = self.text, len(self.text)
        i = self.pos
        while i < n and t[i] in _WS:
            i += 1
        if i >= n:
            self.tok = ("end", "", i)
            self.pos = i
            return
        c = t[i]
        start = i
        if c in _DIGITS or (c == "." and i + 1 < n and t[i + 1] in _DIGITS):
            j = i
            while j < n and t[j] in _DIGITS:
                j += 1
            if j < n and t[j] == ".":
                j += 1
                while j < n and t[j] in _DIGITS:
                    j += 1
            if j < n and t[j] in "eE":
                k = j + 1
                if k < n and t[k] in "+-":
                    k += 1
                if k < n and t[k] in _DIGITS:
                    j = k
                    while j < n and t[j] in _DIGITS:
                        j += 1
            self.tok = ("num", t[start:j], start)
            self.pos = j
            return
        if c.isalpha() or c == "_":
            j = i
            while j < n and (t[j].isalnum() or t[j] == "_"):
                j += 1
            self.tok = ("ident", t[start:j], start)
            self.pos = j
            return
        if c in "+-*/^()":
            self.tok = (c, c, start)
            self.pos = i + 1
            return
        raise ParseError(f"unexpected character {c!r}", start)


class _Parser:
    def __init__(self, text: str):
        self.lex = _Lexer(text)

    def peek(self):
        return self.lex.tok

    def next(self):
        tok = self.lex.tok
        self.lex._advance()
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.sum_()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return e

    def sum_(self) -> Expr:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, mul(-1, rhs))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else mul(e, pow_(rhs, -1))
        return e

    def unary(self) -> Expr:
        # '-' binds looser than '^': -x^2 parses as -(x^2)
        if self.peek()[0] == "-":
            self.next()
            return mul(-1, self.unary())
        if self.peek()[0] == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "^":
            self.next()
            return pow_(base, self.unary())  # right-assoc, unary minus ok
        return base

    def atom(self) -> Expr:
        tok = self.next()
        kind, value, offset = tok
        if kind == "num":
            return Const(Fraction(value))
        if kind == "ident":
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", offset)
                self.next()
                arg = self.sum_()
                self.expect(")")
                return Call(value, arg)
            return Sym(value)
        if kind == "(":
            e = self.sum_()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {value!r}" if value else
                         "unexpected end of input", offset)


def parse(text: str) -> Expr:
    """Parse infix text into an expression tree.

    Numbers become exact rationals (`3`, `0.25`, `1e-3` are all exact);
    `/` builds a reciprocal power, `^` is right-associative and binds
    tighter than unary minus.  Raises ParseError with a byte offset.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------
# formatting

_PREC_ADD = 10
_PREC_MUL = 20
_PREC_NEG = 15
_PREC_POW = 30
_PREC_ATOM = 40


def _fmt_const(v: Number) -> tuple[str, int]:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            s = str(v.numerator)
            return s, (_PREC_ATOM if v >= 0 else _PREC_NEG)
        s = f"{v.numerator}/{v.denominator}"
        return s, _PREC_MUL if v >= 0 else _PREC_NEG
    s = repr(float(v))
    return s, (_PREC_ATOM if v >= 0 else _PREC_NEG)


def _paren(s: str, prec: int, want: int) -> str:
    return f"({s})" if prec < want else s


def _fmt(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Sym):
        return e.name, _PREC_ATOM
    if isinstance(e, Call):
        inner, _ = _fmt(e.arg)
        return f"{e.fn}({inner})", _PREC_ATOM
    if isinstance(e, Pow):
        ex = e.exponent
        if isinstance(ex, Const) and ex.is_rational and ex.value < 0:
            inv, p = _fmt(pow_(e.base, Const(-ex.value)))
            return f"1/{_paren(inv, p, _PREC_POW)}", _PREC_MUL
        bs, bp = _fmt(e.base)
        bs = _paren(bs, bp, _PREC_ATOM)
        if isinstance(ex, Const) and ex.is_rational and \
                ex.value.denominator == 1 and ex.value >= 0:
            return f"{bs}^{ex.value.numerator}", _PREC_POW
        es, _ = _fmt(ex)
        return f"{bs}^({es})", _PREC_POW
    if isinstance(e, Mul):
        num_parts: list[str] = []
        den_parts: list[str] = []
        negative = False
        coeff: Number | None = None
        for f in e.factors:
            if isinstance(f, Const):
                v = f.value
                if v < 0:
                    negative = not negative
                    v = -v
                coeff = v if coeff is None else _const_mul(coeff, v)
            elif isinstance(f, Pow) and isinstance(f.exponent, Const) and \
                    f.exponent.is_rational and f.exponent.value < 0:
                inv = pow_(f.base, Const(-f.exponent.value))
                s, p = _fmt(inv)
                den_parts.append(_paren(s, p, _PREC_POW))
            else:
                s, p = _fmt(f)
                num_parts.append(_paren(s, p, _PREC_POW))
        if coeff is not None:
            if isinstance(coeff, Fraction) and coeff.denominator != 1:
                num_parts.insert(0, str(coeff.numerator))
                den_parts.insert(0, str(coeff.denominator))
            elif coeff != 1 or not (num_parts or den_parts):
                s, _ = _fmt_const(coeff)
                num_parts.insert(0, s)
        if not num_parts:
            num_parts = ["1"]
        out = "*".join(num_parts)
        if den_parts:
            if len(den_parts) == 1 and "*" not in den_parts[0]:
                out += f"/{den_parts[0]}"
            else:
                out += "/(" + "*".join(den_parts) + ")"
        prec = _PREC_MUL
        if negative:
            out = "-" + out
            prec = _PREC_NEG
        return out, prec
    if isinstance(e, Add):
        first = True
        out = ""
        for t in e.terms:
            s, p = _fmt(t)
            if first:
                out = _paren(s, p, _PREC_ADD)
                first = False
                continue
            if s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out, _PREC_ADD
    raise TypeError(type(e))


def format_expr(e: Expr) -> str:
    """Render with minimal parentheses; parse(format_expr(e)) is
    evaluation-equivalent to e."""
    return _fmt(e)[0]


# ---------------------------------------------------------------------
# evaluation

def _cot(x: float) -> float:
    return math.cos(x) / math.sin(x)


def _csc(x: float) -> float:
    return 1.0 / math.sin(x)


_MATH_FN: dict[str, Callable[[float], float]] = {
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "cot": _cot, "csc": _csc,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
}


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate to a float.  Unbound symbols and domain violations
    (log of a nonpositive value, sqrt of a negative, division by zero)
    raise EvalError naming the offending subexpression; overflow saturates
    to inf and non-finite values propagate."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvalError(f"unbound symbol '{e.name}'", e) from None
    if isinstance(e, Add):
        try:
            return math.fsum(evaluate(t, env) for t in e.terms)
        except ValueError:   # -inf + inf
            return math.nan
        except OverflowError:
            return math.inf
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, env)
        return out
    if isinstance(e, Pow):
        b = evaluate(e.base, env)
        ex = e.exponent
        if isinstance(ex, Const) and ex.is_rational and \
                ex.value.denominator == 1:
            n = int(ex.value)
            if b == 0.0 and n < 0:
                raise EvalError("division by zero", e)
            try:
                return b ** n
            except OverflowError:
                return math.inf if b > 0 or n % 2 == 0 else -math.inf
        x = evaluate(ex, env)
        if b == 0.0 and x < 0:
            raise EvalError("division by zero", e)
        if b < 0.0 and x != int(x):
            raise EvalError("negative base with fractional exponent", e)
        try:
            return b ** x
        except OverflowError:
            return math.inf
    if isinstance(e, Call):
        a = evaluate(e.arg, env)
        if not math.isfinite(a):
            # non-finite values propagate; domain checks need a real point
            try:
                return _MATH_FN[e.fn](a)
            except (ValueError, OverflowError):
                return math.nan
        if e.fn == "log" and a <= 0.0:
            raise EvalError("log of a nonpositive value", e)
        if e.fn == "sqrt" and a < 0.0:
            raise EvalError("sqrt of a negative value", e)
        if e.fn in ("cot", "csc") and math.sin(a) == 0.0:
            raise EvalError("pole of " + e.fn, e)
        try:
            return _MATH_FN[e.fn](a)
        except OverflowError:
            return math.inf
        except ValueError:
            raise EvalError(f"domain error in {e.fn}", e) from None
    raise TypeError(type(e))


def _exact_root(v: Fraction, q: int) -> Fraction:
    # q-th root of a nonnegative rational, exact or ExactnessError
    if v < 0:
        raise ExactnessError("negative radicand")

    def iroot(n: int) -> int:
        r = round(n ** (1.0 / q))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c ** q == n:
                return c
        raise ExactnessError("not a perfect power")

    return Fraction(iroot(v.numerator), iroot(v.denominator))


_EXACT_CALL_AT_ZERO = {
    "exp": Fraction(1), "sin": Fraction(0), "cos": Fraction(1),
    "tan": Fraction(0), "sinh": Fraction(0), "cosh": Fraction(1),
    "tanh": Fraction(0),
}


def evaluate_exact(e: Expr, env: Mapping[str, Fraction]) -> Fraction:
    """Evaluate over the rationals.  Raises ExactnessError whenever the
    value is not provably rational (transcendental function at a nonzero
    argument, non-perfect-square radicand, float constant)."""
    if isinstance(e, Const):
        if not e.is_rational:
            raise ExactnessError("float constant")
        return e.value
    if isinstance(e, Sym):
        try:
            v = env[e.name]
        except KeyError:
            raise EvalError(f"unbound symbol '{e.name}'", e) from None
        if isinstance(v, float):
            raise ExactnessError("float binding")
        return Fraction(v)
    if isinstance(e, Add):
        return sum((evaluate_exact(t, env) for t in e.terms), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for f in e.factors:
            out *= evaluate_exact(f, env)
        return out
    if isinstance(e, Pow):
        b = evaluate_exact(e.base, env)
        x = evaluate_exact(e.exponent, env)
        if x.denominator == 1:
            n = int(x)
            if b == 0 and n < 0:
                raise EvalError("division by zero", e)
            return b ** n
        root = _exact_root(b, x.denominator)
        return root ** x.numerator
    if isinstance(e, Call):
        a = evaluate_exact(e.arg, env)
        if e.fn == "sqrt":
            return _exact_root(a, 2)
        if a == 0 and e.fn in _EXACT_CALL_AT_ZERO:
            return _EXACT_CALL_AT_ZERO[e.fn]
        if e.fn == "log" and a == 1:
            return Fraction(0)
        raise ExactnessError(f"{e.fn} at a nonzero rational")
    raise TypeError(type(e))


# ---------------------------------------------------------------------
# differentiation

def diff(e: Expr, s: Union[str, Sym]) -> Expr:
    """Exact symbolic derivative with respect to one symbol."""
    name = s.name if isinstance(s, Sym) else s
    memo: dict[Expr, Expr] = {}

    def d(t: Expr) -> Expr:
        got = memo.get(t)
        if got is not None:
            return got
        if isinstance(t, Const):
            r = ZERO
        elif isinstance(t, Sym):
            r = ONE if t.name == name else ZERO
        elif isinstance(t, Add):
            r = add(*[d(x) for x in t.terms])
        elif isinstance(t, Mul):
            parts = []
            fs = t.factors
            for i, f in enumerate(fs):
                df = d(f)
                if df is ZERO or df == ZERO:
                    continue
                parts.append(mul(*fs[:i], df, *fs[i + 1:]))
            r = add(*parts) if parts else ZERO
        elif isinstance(t, Pow):
            b, x = t.base, t.exponent
            db = d(b)
            dx = d(x)
            if dx == ZERO:
                # d(b^c) = c*b^(c-1)*db
                r = mul(x, pow_(b, add(x, -1)), db) if db != ZERO else ZERO
            else:
                # general: b^x * (dx*log(b) + x*db/b)
                r = mul(t, add(mul(dx, log(b)), mul(x, db, pow_(b, -1))))
        elif isinstance(t, Call):
            a = t.arg
            da = d(a)
            if da == ZERO:
                r = ZERO
            else:
                fn = t.fn
                if fn == "exp":
                    g = t
                elif fn == "log":
                    g = pow_(a, -1)
                elif fn == "sqrt":
                    g = mul(HALF, pow_(t, -1))
                elif fn == "sin":
                    g = cos(a)
                elif fn == "cos":
                    g = mul(-1, sin(a))
                elif fn == "tan":
                    g = add(1, pow_(t, 2))
                elif fn == "cot":
                    g = mul(-1, add(1, pow_(t, 2)))
                elif fn == "csc":
                    g = mul(-1, t, cot(a))
                elif fn == "sinh":
                    g = cosh(a)
                elif fn == "cosh":
                    g = sinh(a)
                elif fn == "tanh":
                    g = add(1, mul(-1, pow_(t, 2)))
                else:  # pragma: no cover
                    raise TypeError(fn)
                r = mul(g, da)
        else:
            raise TypeError(type(t))
        memo[t] = r
        return r

    return d(e)


# ---------------------------------------------------------------------
# substitution

def substitute(e: Expr, s: Union[str, Sym], replacement) -> Expr:
    """Replace every occurrence of a symbol (no binders, so replacement
    is capture-free by construction)."""
    return substitute_map(e, {s.name if isinstance(s, Sym) else s:
                              replacement})


def substitute_map(e: Expr, mapping: Mapping[str, object]) -> Expr:
    repl = {k: _as_expr(v) for k, v in mapping.items()}
    memo: dict[Expr, Expr] = {}

    def walk(t: Expr) -> Expr:
        got = memo.get(t)
        if got is not None:
            return got
        if isinstance(t, Sym):
            r = repl.get(t.name, t)
        elif isinstance(t, Const):
            r = t
        elif isinstance(t, Add):
            r = add(*[walk(x) for x in t.terms])
        elif isinstance(t, Mul):
            r = mul(*[walk(x) for x in t.factors])
        elif isinstance(t, Pow):
            r = pow_(walk(t.base), walk(t.exponent))
        elif isinstance(t, Call):
            r = call(t.fn, walk(t.arg))
        else:
            raise TypeError(type(t))
        memo[t] = r
        return r

    return walk(e)


def free_symbols(e: Expr) -> frozenset[str]:
    memo: dict[Expr, frozenset] = {}

    def walk(t: Expr) -> frozenset:
        got = memo.get(t)
        if got is not None:
            return got
        if isinstance(t, Sym):
            r = frozenset((t.name,))
        elif isinstance(t, Const):
            r = frozenset()
        elif isinstance(t, Add):
            r = frozenset().union(*[walk(x) for x in t.terms])
        elif isinstance(t, Mul):
            r = frozenset().union(*[walk(x) for x in t.factors])
        elif isinstance(t, Pow):
            r = walk(t.base) | walk(t.exponent)
        else:
            r = walk(t.arg)
        memo[t] = r
        return r

    return walk(e)


# ---------------------------------------------------------------------
# simplification

_RANK = {Const: 0, Sym: 1, Call: 2, Pow: 3, Add: 4, Mul: 5}


def _order_key(e: Expr):
    if isinstance(e, Sym):
        return (1, e.name, 0)
    return (_RANK[type(e)], "", e.shash)


def _term_split(t: Expr) -> tuple[Number, Expr | None]:
    # coefficient and core of an additive term
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Mul):
        coeff: Number = Fraction(1)
        rest = []
        for f in t.factors:
            if isinstance(f, Const):
                coeff = _const_mul(coeff, f.value)
            else:
                rest.append(f)
        if not rest:
            return coeff, None
        core = rest[0] if len(rest) == 1 else Mul(tuple(rest))
        return coeff, core
    return Fraction(1), t


def _sqrt_fold(v: Fraction) -> Expr | None:
    if v < 0:
        return None
    try:
        return Const(_exact_root(v, 2))
    except ExactnessError:
        return None


def simplify(e: Expr) -> Expr:
    """Local rewriting to a stable fixed point: constant folding with
    exact rational arithmetic, flattening, like-term and like-factor
    collection, identity elimination.  Idempotent; never trig identities,
    never exact-to-float demotion."""
    memo: dict[Expr, Expr] = {}

    def walk(t: Expr) -> Expr:
        got = memo.get(t)
        if got is not None:
            return got
        r = _simp(t, walk)
        memo[t] = r
        memo[r] = r
        return r

    return walk(e)


def _simp(t: Expr, walk) -> Expr:
    if isinstance(t, (Const, Sym)):
        return t

    if isinstance(t, Add):
        const: Number = Fraction(0)
        order: list[Expr] = []
        buckets: dict[Expr, Number] = {}
        stack = [walk(x) for x in t.terms]
        for term in _flat_add(stack):
            if isinstance(term, Const):
                const = _const_add(const, term.value)
                continue
            coeff, core = _term_split(term)
            if core is None:
                const = _const_add(const, coeff)
                continue
            if core in buckets:
                buckets[core] = _const_add(buckets[core], coeff)
            else:
                buckets[core] = coeff
                order.append(core)
        terms: list[Expr] = []
        if const != 0:
            terms.append(Const(const))
        for core in order:
            cf = buckets[core]
            if cf == 0:
                continue
            terms.append(core if cf == 1 else mul(Const(cf), core))
        if not terms:
            return Const(const)  # keeps exact 0 / float 0.0 distinction
        if len(terms) == 1:
            return terms[0]
        return Add(tuple(terms))

    if isinstance(t, Mul):
        coeff: Number = Fraction(1)
        order: list[Expr] = []
        exps: dict[Expr, Number] = {}
        for f in _flat_mul([walk(x) for x in t.factors]):
            if isinstance(f, Const):
                coeff = _const_mul(coeff, f.value)
                continue
            if isinstance(f, Pow) and isinstance(f.exponent, Const) and \
                    f.exponent.is_rational:
                base, ex = f.base, f.exponent.value
            else:
                base, ex = f, Fraction(1)
            if base in exps:
                exps[base] = exps[base] + ex
            else:
                exps[base] = ex
                order.append(base)
        if coeff == 0 and isinstance(coeff, Fraction):
            return ZERO
        factors: list[Expr] = []
        for base in sorted(order, key=_order_key):
            ex = exps[base]
            if ex == 0:
                continue
            factors.append(walk(pow_(base, Const(ex))))
        out: list[Expr] = []
        for f in _flat_mul(factors):  # folded powers may re-expose consts
            if isinstance(f, Const):
                coeff = _const_mul(coeff, f.value)
            else:
                out.append(f)
        if coeff == 0 and isinstance(coeff, Fraction):
            return ZERO
        if not out:
            return Const(coeff)
        if coeff != 1:
            out.insert(0, Const(coeff))
        if len(out) == 1:
            return out[0]
        return Mul(tuple(out))

    if isinstance(t, Pow):
        b = walk(t.base)
        x = walk(t.exponent)
        if isinstance(x, Const) and x.is_rational:
            xv = x.value
            if xv == 0:
                return ONE
            if xv == 1:
                return b
            if isinstance(b, Const) and b.is_rational:
                bv = b.value
                if bv == 1:
                    return ONE
                if bv == 0 and xv > 0:
                    return ZERO
                if xv.denominator == 1 and abs(xv) <= _FOLD_POW_LIMIT \
                        and bv != 0:
                    return Const(bv ** int(xv))
                if xv == Fraction(1, 2):
                    folded = _sqrt_fold(bv)
                    if folded is not None:
                        return folded
            if isinstance(b, Pow) and isinstance(b.exponent, Const) and \
                    b.exponent.is_rational and \
                    b.exponent.value.denominator == 1 and \
                    xv.denominator == 1:
                return walk(pow_(b.base, Const(b.exponent.value * xv)))
        return pow_(b, x)

    if isinstance(t, Call):
        a = walk(t.arg)
        if isinstance(a, Const):
            if a.is_rational:
                av = a.value
                if av == 0 and t.fn in _EXACT_CALL_AT_ZERO:
                    return Const(_EXACT_CALL_AT_ZERO[t.fn])
                if t.fn == "log" and av == 1:
                    return ZERO
                if t.fn == "sqrt":
                    folded = _sqrt_fold(av)
                    if folded is not None:
                        return folded
            else:
                try:
                    return Const(_MATH_FN[t.fn](float(a.value)))
                except (ValueError, ZeroDivisionError, OverflowError):
                    pass
        return call(t.fn, a)

    raise TypeError(type(t))


def _flat_add(items: Iterable[Expr]):
    for it in items:
        if isinstance(it, Add):
            yield from it.terms
        else:
            yield it


def _flat_mul(items: Iterable[Expr]):
    for it in items:
        if isinstance(it, Mul):
            yield from it.factors
        else:
            yield it


# ---------------------------------------------------------------------
# compiled vectorized evaluation

_NP_FN = {
    "exp": "np.exp", "log": "np.log", "sqrt": "np.sqrt",
    "sin": "np.sin", "cos": "np.cos", "tan": "np.tan",
    "sinh": "np.sinh", "cosh": "np.cosh", "tanh": "np.tanh",
}

_compile_cache: dict[tuple[Expr, tuple[str, ...]], Callable] = {}


def compile_fn(e: Expr, variables: Sequence[str]) -> Callable:
    """Compile to a vectorized numpy function of the given variables.

    Shared subtrees become shared temporaries, so heavily structured
    derivative trees evaluate in roughly DAG-size many operations.
    Domain violations yield nan/inf elementwise instead of raising;
    callers decide how to treat non-finite output.
    """
    key = (e, tuple(variables))
    fn = _compile_cache.get(key)
    if fn is not None:
        return fn

    names: dict[int, str] = {}
    lines: list[str] = []
    counter = 0
    var_set = set(variables)

    def emit(line: str):
        lines.append("        " + line)

    def visit(node: Expr) -> str:
        nonlocal counter
        got = names.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            # np.float64 so 0.0**-3 yields inf under errstate instead of
            # raising like a bare python float would
            ref = f"np.float64({float(node.value)!r})"
        elif isinstance(node, Sym):
            if node.name not in var_set:
                raise EvalError(f"unbound symbol '{node.name}'", node)
            ref = f"v_{node.name}"
        else:
            counter += 1
            ref = f"t{counter}"
            if isinstance(node, Add):
                emit(f"{ref} = " + " + ".join(visit(x) for x in node.terms))
            elif isinstance(node, Mul):
                emit(f"{ref} = " + " * ".join(visit(x) for x in node.factors))
            elif isinstance(node, Pow):
                b = visit(node.base)
                ex = node.exponent
                if isinstance(ex, Const) and ex.is_rational and \
                        ex.value.denominator == 1:
                    emit(f"{ref} = {b} ** {int(ex.value)}")
                elif isinstance(ex, Const) and ex.is_rational and \
                        ex.value == Fraction(1, 2):
                    emit(f"{ref} = np.sqrt({b})")
                else:
                    emit(f"{ref} = {b} ** ({visit(ex)})")
            elif isinstance(node, Call):
                a = visit(node.arg)
                if node.fn == "cot":
                    emit(f"{ref} = np.cos({a}) / np.sin({a})")
                elif node.fn == "csc":
                    emit(f"{ref} = 1.0 / np.sin({a})")
                else:
                    emit(f"{ref} = {_NP_FN[node.fn]}({a})")
            else:
                raise TypeError(type(node))
        names[id(node)] = ref
        return ref

    result = visit(e)
    args = ", ".join(f"v_{v}" for v in variables)
    src = (
        f"def _generated({args}):\n"
        f"    with np.errstate(all='ignore'):\n"
        + "\n".join(lines) + ("\n" if lines else "")
        + f"        return {result}\n"
    )
    namespace: dict = {"np": np}
    exec(compile(src, f"<expr:{id(e)}>", "exec"), namespace)
    raw = namespace["_generated"]

    def wrapped(*arrays):
        arrs = [np.asarray(a, dtype=float) for a in arrays]
        out = raw(*arrs)
        if np.isscalar(out) or (isinstance(out, np.ndarray) and
                                out.shape == ()):
            shape = np.broadcast(*arrs).shape if arrs else ()
            out = np.full(shape, float(out)) if shape else np.asarray(
                out, dtype=float)
        return out

    _compile_cache[key] = wrapped
    return wrapped


def pointwise_equal(e1: Expr, e2: Expr,
                    domain: Mapping[str, tuple[float, float]],
                    n: int = 50, seed: int = 0, tol: float = 1e-10,
                    exclude: Callable[[dict], bool] | None = None) -> bool:
    """Sampling oracle for semantic equality: at n seeded points in the
    boxed domain, |e1 - e2| <= tol*(1 + max(|e1|,|e2|)) must hold.
    Points where either side is non-finite are rejected and redrawn."""
    names = sorted(free_symbols(e1) | free_symbols(e2))
    for nm in names:
        if nm not in domain:
            raise ValueError(f"no domain declared for symbol '{nm}'")
    rng = np.random.default_rng(seed)
    f1 = compile_fn(e1, names)
    f2 = compile_fn(e2, names)
    checked = 0
    attempts = 0
    while checked < n:
        attempts += 1
        if attempts > 100 * n:
            raise ExprError("could not find enough admissible sample points")
        pt = {nm: rng.uniform(*domain[nm]) for nm in names}
        if exclude is not None and exclude(pt):
            continue
        args = [pt[nm] for nm in names]
        v1 = float(f1(*args))
        v2 = float(f2(*args))
        if not (math.isfinite(v1) and math.isfinite(v2)):
            continue
        if abs(v1 - v2) > tol * (1.0 + max(abs(v1), abs(v2))):
            return False
        checked += 1
    return True
