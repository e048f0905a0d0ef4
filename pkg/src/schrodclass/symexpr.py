"""Exact symbolic expression layer shared by all other modules.

Expressions are plain sympy objects over the real variables t, x, built from
exact rational/complex constants, the arithmetic operations, rational powers
and the function set {exp, sin, cos, ln, abs, sgn, conj}.  This module owns
the textual grammar (parser + deterministic printer), differentiation,
normalization and numeric evaluation; sympy supplies the tree machinery.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import sympy as sp

t, x = sp.symbols("t x", real=True)

_FUNCTIONS = {
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "ln": sp.log,
    "abs": sp.Abs,
    "sgn": sp.sign,
    "conj": sp.conjugate,
}

PROBE_COUNT = 32
PROBE_TOL = 1e-10


class ExprError(Exception):
    """Base class for errors raised by the expression layer."""


class ParseError(ExprError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvalError(ExprError):
    """Singular point hit during numeric evaluation."""


class InconclusiveError(ExprError):
    """Probing could not collect enough valid sample points."""


class PrintError(ExprError):
    """Expression contains nodes outside the printable grammar."""


# ---------------------------------------------------------------------------
# parsing

_TOKEN_OPS = "+-*/^()"


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _TOKEN_OPS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    """Recursive-descent parser for the expression grammar."""

    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in "+-":
            op = self.advance()[0]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] in "*/":
            op = self.advance()[0]
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self):
        base = self.unary()
        if self.peek()[0] == "^":
            self.advance()
            expo = self.exponent()
            base = base**expo
        return base

    def unary(self):
        if self.peek()[0] == "-":
            self.advance()
            return -self.unary()
        return self.base()

    def base(self):
        kind, value, position = self.advance()
        if kind == "num":
            return _number(value)
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if value == "i":
                return sp.I
            if value == "t":
                return t
            if value == "x":
                return x
            if value in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[value](arg)
            raise ParseError(f"unknown identifier {value!r}", position)
        raise ParseError(f"expected a value, found {value!r}", position)

    def exponent(self):
        tok = self.peek()
        if tok[0] == "num":
            self.advance()
            return _number(tok[1])
        if tok[0] == "(":
            self.advance()
            sign = 1
            if self.peek()[0] == "-":
                self.advance()
                sign = -1
            num = sp.Rational(self.expect("num")[1])
            if self.peek()[0] == "/":
                self.advance()
                den = sp.Rational(self.expect("num")[1])
                num = num / den
            self.expect(")")
            return sign * num
        raise ParseError(f"expected an exponent, found {tok[1]!r}", tok[2])


def _number(literal):
    if "." in literal:
        return sp.Rational(Fraction(literal))
    return sp.Integer(literal)


def parse(text):
    """Parse a grammar string into a sympy expression (exact constants)."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing

_FUNC_NAMES = {
    sp.exp: "exp",
    sp.sin: "sin",
    sp.cos: "cos",
    sp.log: "ln",
    sp.Abs: "abs",
    sp.sign: "sgn",
    sp.conjugate: "conj",
}

# precedence levels used for parenthesization
_P_ADD, _P_MUL, _P_POW, _P_ATOM = 1, 2, 3, 4


def print_expr(e):
    """Deterministic grammar rendering; parse(print_expr(e)) reproduces e
    structurally whenever e is normalized."""
    s, _ = _render(sp.sympify(e))
    return s


def _render(e):
    if e is sp.I:
        return "i", _P_ATOM
    if e is sp.E:  # exp(1) auto-evaluates to the E constant
        return "exp(1)", _P_ATOM
    if isinstance(e, sp.Symbol):
        return e.name, _P_ATOM
    if isinstance(e, sp.Integer):
        if e < 0:
            return f"-{-e}", _P_ADD
        return str(e), _P_ATOM
    if isinstance(e, sp.Rational):
        if e < 0:
            return f"-{-e.p}/{e.q}", _P_ADD
        return f"{e.p}/{e.q}", _P_MUL
    if e.func in _FUNC_NAMES:
        inner, _ = _render(e.args[0])
        return f"{_FUNC_NAMES[e.func]}({inner})", _P_ATOM
    if isinstance(e, sp.Add):
        terms = sorted(e.args, key=sp.default_sort_key)
        parts = []
        for i, term in enumerate(terms):
            s, prec = _render(term)
            if i == 0:
                parts.append(s)
            elif s.startswith("-"):
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        return "".join(parts), _P_ADD
    if isinstance(e, sp.Mul):
        coeff, rest = e.as_coeff_Mul()
        factors = sorted(sp.Mul.make_args(rest), key=sp.default_sort_key)
        num_parts, den_parts = [], []
        for f in factors:
            base, expo = f.as_base_exp()
            if expo.is_Rational and expo < 0:
                s, prec = _render(base**-expo)
                den_parts.append(s if prec >= _P_POW else f"({s})")
            else:
                s, prec = _render(f)
                num_parts.append(s if prec >= _P_MUL else f"({s})")
        sign = ""
        if coeff.is_negative:
            sign, coeff = "-", -coeff
        if coeff != 1:
            if coeff.is_Integer:
                num_parts.insert(0, str(coeff))
            else:
                num_parts.insert(0, str(coeff.p))
                den_parts.insert(0, str(coeff.q))
        if not num_parts:
            num_parts = ["1"]
        out = "*".join(num_parts)
        for d in den_parts:
            out += "/" + d
        return sign + out, _P_ADD if sign else _P_MUL
    if isinstance(e, sp.Pow):
        base, expo = e.args
        if not expo.is_Rational:
            raise PrintError(f"non-rational exponent in {e}")
        bs, bprec = _render(base)
        if bprec < _P_POW:
            bs = f"({bs})"
        if expo.is_Integer and expo >= 0:
            return f"{bs}^{expo}", _P_POW
        if expo.is_Integer:
            return f"{bs}^({expo})", _P_POW
        return f"{bs}^({expo.p}/{expo.q})", _P_POW
    raise PrintError(f"cannot render {e!r} in the grammar")


# ---------------------------------------------------------------------------
# algebraic operations

def normalize(e):
    """Expanded sum-of-monomials normal form; idempotent."""
    return sp.expand(sp.sympify(e))


def differentiate(e, var):
    """Exact partial derivative; |f| and sgn(f) handled away from f = 0."""
    if var not in (t, x):
        raise ValueError(f"unknown differentiation variable {var!r}")
    return sp.diff(sp.sympify(e), var)


@dataclass(frozen=True)
class ZeroVerdict:
    value: bool
    certainty: str  # "exact" or "probabilistic"

    def __bool__(self):
        return self.value


def _probe_seed():
    return int(os.environ.get("SCHRODCLASS_SEED", "0"))


def probe_points(e, count=PROBE_COUNT, seed=None, box=3.0):
    """Random non-singular (t, x) probe points for e."""
    rng = random.Random(_probe_seed() if seed is None else seed)
    fn = _evaluator(sp.sympify(e))
    points = []
    for _ in range(200 * count):
        tv = rng.uniform(-box, box)
        xv = rng.uniform(-box, box)
        try:
            value = fn(tv, xv)
        except (ArithmeticError, ValueError):
            continue
        if value != value or abs(value) == float("inf"):  # nan / inf
            continue
        points.append((tv, xv, value))
        if len(points) >= count:
            return points
    raise InconclusiveError(f"could not find {count} valid probe points for {e}")


def zero_verdict(e, seed=None):
    """Decide whether e is identically zero.

    Normalization first; if inconclusive, falls back to randomized probing
    (all |values| < 1e-10 at PROBE_COUNT valid points => probabilistic true).
    """
    n = normalize(e)
    if n.is_zero:
        return ZeroVerdict(True, "exact")
    if n.is_number:
        v = complex(n.evalf())
        return ZeroVerdict(abs(v) < PROBE_TOL, "exact")
    n2 = normalize(sp.cancel(n))
    if n2.is_zero:
        return ZeroVerdict(True, "exact")
    if sp.count_ops(n2) <= 200:
        n3 = sp.simplify(n2)
        if n3.is_zero:
            return ZeroVerdict(True, "exact")
        if n3.is_number:
            return ZeroVerdict(abs(complex(n3.evalf())) < PROBE_TOL, "exact")
        if not n3.has(sp.Piecewise, sp.zoo, sp.nan):
            n2 = n3
    values = [v for _, _, v in probe_points(n2, seed=seed)]
    return ZeroVerdict(all(abs(v) < PROBE_TOL for v in values), "probabilistic")


def is_zero(e, seed=None):
    return zero_verdict(e, seed=seed).value


@lru_cache(maxsize=4096)
def _evaluator(e):
    import numpy as np

    modules = [
        {"sign": lambda z: z / abs(z) if z != 0 else 0.0,
         "conjugate": np.conj, "Abs": abs,
         "arctan2": lambda a, b: np.arctan2(complex(a).real, complex(b).real)},
        "numpy",
    ]
    fn = sp.lambdify((t, x), e, modules=modules)

    def wrapped(tv, xv):
        with _np_errstate(np):
            return complex(fn(complex(tv), complex(xv)))

    return wrapped


def _np_errstate(np):
    return np.errstate(divide="raise", invalid="raise")


def eval_expr(e, tv, xv):
    """Numeric evaluation of e at real (t, x); raises EvalError at singular
    points (division by zero, log of zero)."""
    try:
        value = _evaluator(sp.sympify(e))(tv, xv)
    except (ArithmeticError, ValueError) as exc:
        raise EvalError(f"singular evaluation of {e} at t={tv}, x={xv}") from exc
    if value != value or abs(value) == float("inf"):
        raise EvalError(f"non-finite value of {e} at t={tv}, x={xv}")
    return value


# ---------------------------------------------------------------------------
# predicates used by the field/transform layers

def is_x_free(e):
    return x not in sp.sympify(e).free_symbols


def is_real_valued(e, seed=None):
    """True when e equals its own conjugate (exactly or by probing)."""
    e = sp.sympify(e)
    return zero_verdict(sp.expand(e - sp.conjugate(e)), seed=seed).value


def is_tfunction(e, seed=None):
    """Real-valued function of t alone (the parameter-function class)."""
    return is_x_free(e) and is_real_valued(e, seed=seed)


def equal(e1, e2, seed=None):
    return zero_verdict(sp.sympify(e1) - sp.sympify(e2), seed=seed).value
