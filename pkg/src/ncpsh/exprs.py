"""Parser and series expansion for noncommutative expressions.

Grammar (apostrophe = adjoint, juxtaposition = product):

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor+
    factor := atom ('^' int | "'")*
    atom   := number | 'x' int | '(' expr ')' | func '(' expr ')'
    func   := 'inv' | 'exp' | 'log' | 're'

Numbers may carry an 'i' suffix ("2.5i"); "(1+2i)" parses as a sum.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .words import EMPTY_WORD, NCSeries, real_part, series_adjoint, series_mul, series_neumann


class ParseError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class NotExpandable(ValueError):
    """Inv/Exp/Log argument cannot be expanded as a power series at 0."""


# -- AST ------------------------------------------------------------------


class NCExpr:
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __mul__(self, other):
        if isinstance(other, NCExpr):
            return Mul(self, other)
        return ScalarMul(other, self)

    def __rmul__(self, scalar):
        return ScalarMul(scalar, self)

    def __neg__(self):
        return ScalarMul(-1, self)

    def adjoint(self):
        return Adjoint(self)

    def __repr__(self):
        return f"{type(self).__name__}({pretty(self)!r})"


def _coerce(value):
    if isinstance(value, NCExpr):
        return value
    return Const(value)


@dataclass(repr=False, eq=False)
class Const(NCExpr):
    value: object  # complex scalar or square ndarray

    def __post_init__(self):
        if not isinstance(self.value, np.ndarray):
            self.value = complex(self.value)

    def __eq__(self, other):
        if not isinstance(other, Const):
            return NotImplemented
        a, b = self.value, other.value
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            return isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and np.array_equal(a, b)
        return a == b


@dataclass(repr=False)
class Var(NCExpr):
    index: int


@dataclass(repr=False)
class Adjoint(NCExpr):
    child: NCExpr


@dataclass(repr=False)
class Add(NCExpr):
    left: NCExpr
    right: NCExpr


@dataclass(repr=False)
class Sub(NCExpr):
    left: NCExpr
    right: NCExpr


@dataclass(repr=False)
class Mul(NCExpr):
    left: NCExpr
    right: NCExpr


@dataclass(repr=False, eq=False)
class ScalarMul(NCExpr):
    scalar: complex
    child: NCExpr

    def __post_init__(self):
        self.scalar = complex(self.scalar)

    def __eq__(self, other):
        return (isinstance(other, ScalarMul)
                and self.scalar == other.scalar and self.child == other.child)


@dataclass(repr=False)
class Pow(NCExpr):
    child: NCExpr
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("Pow exponent must be nonnegative; use inv() for inverses")


@dataclass(repr=False)
class Inv(NCExpr):
    child: NCExpr


@dataclass(repr=False)
class Exp(NCExpr):
    child: NCExpr


@dataclass(repr=False)
class Log(NCExpr):
    child: NCExpr


@dataclass(repr=False)
class RealPart(NCExpr):
    child: NCExpr


def max_var_index(e: NCExpr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return 0
    children = [v for v in vars(e).values() if isinstance(v, NCExpr)]
    return max((max_var_index(c) for c in children), default=0)


# -- tokenizer / parser -----------------------------------------------------

_TOKEN_RE = re.compile(r"""
      (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?i?|i)
    | (?P<name>[a-zA-Z]+\d*)
    | (?P<op>[-+^'()])
    | (?P<ws>\s+)
""", re.VERBOSE)

_FUNCS = {"inv": Inv, "exp": Exp, "log": Log, "re": RealPart}


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "num":
            raw = m.group()
            if raw == "i":
                value = 1j
            elif raw.endswith("i"):
                value = float(raw[:-1]) * 1j
            else:
                value = complex(float(raw))
            tokens.append(("num", value, pos))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group(), pos))
        elif m.lastgroup == "op":
            tokens.append((m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse_expr(self):
        if self.peek()[0] == "-":
            self.next()
            node = ScalarMul(-1, self.parse_term())
        else:
            node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            rhs = self.parse_term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek()[0] in ("num", "name", "("):
            node = Mul(node, self.parse_factor())
        return node

    def parse_factor(self):
        node = self.parse_atom()
        while self.peek()[0] in ("^", "'"):
            kind, _, pos = self.next()
            if kind == "'":
                node = Adjoint(node)
            else:
                tok = self.next()
                if tok[0] != "num" or tok[1].imag != 0 or tok[1].real != int(tok[1].real):
                    raise ParseError("power must be a nonnegative integer", tok[2])
                node = Pow(node, int(tok[1].real))
        return node

    def parse_atom(self):
        kind, value, pos = self.next()
        if kind == "num":
            return Const(value)
        if kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "name":
            m = re.fullmatch(r"x(\d+)", value)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise ParseError("variable indices start at 1", pos)
                return Var(idx)
            if value in _FUNCS:
                self.expect("(")
                node = self.parse_expr()
                self.expect(")")
                return _FUNCS[value](node)
            raise ParseError(f"unknown identifier {value!r}", pos)
        raise ParseError(f"unexpected token {value!r}", pos)


def parse(text: str) -> NCExpr:
    """Parse an expression; pretty-printing the result re-parses to an equal AST."""
    p = _Parser(text)
    node = p.parse_expr()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"trailing input starting with {tok[1]!r}", tok[2])
    return node


# -- pretty printer ---------------------------------------------------------


def format_complex(z: complex) -> str:
    def fmt(x):
        return repr(int(x)) if float(x).is_integer() else repr(x)

    if z.imag == 0:
        return fmt(z.real)
    if z.real == 0:
        return fmt(z.imag) + "i"
    sign = "+" if z.imag > 0 else "-"
    return f"({fmt(z.real)}{sign}{fmt(abs(z.imag))}i)"


def pretty(e: NCExpr) -> str:
    """Canonical text form; see parse() for the grammar."""
    return _pretty(e, 0)


def _pretty(e, level):
    # level 0: sum context, 1: product context, 2: postfix operand
    if isinstance(e, Const):
        if isinstance(e.value, np.ndarray):
            raise ValueError("matrix constants have no text form")
        s = format_complex(e.value)
        return f"({s})" if (level >= 1 and s.startswith("-")) else s
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, (Add, Sub)):
        op = " + " if isinstance(e, Add) else " - "
        s = _pretty(e.left, 0) + op + _pretty(e.right, 1)
        return f"({s})" if level >= 1 else s
    if isinstance(e, Mul):
        s = _pretty(e.left, 1) + " " + _pretty(e.right, 2)
        return f"({s})" if level >= 2 else s
    if isinstance(e, ScalarMul):
        if e.scalar == -1:
            s = "-" + _pretty(e.child, 1)
            return f"({s})" if level >= 1 else s
        s = format_complex(e.scalar) + " " + _pretty(e.child, 2)
        return f"({s})" if level >= 2 else s
    if isinstance(e, Adjoint):
        return _pretty(e.child, 3) + "'"
    if isinstance(e, Pow):
        return _pretty(e.child, 3) + f"^{e.exponent}"
    for name, cls in _FUNCS.items():
        if isinstance(e, cls):
            return f"{name}({_pretty(e.child, 0)})"
    raise TypeError(f"cannot print {type(e).__name__}")


# -- expansion ---------------------------------------------------------------


def expand(e: NCExpr, maxdeg: int, d=None, k=None) -> NCSeries:
    """Expand into a truncated series at 0.

    Inv needs an invertible constant coefficient, Log a unit constant
    coefficient, Exp a vanishing one; otherwise NotExpandable is raised.
    On nilpotent tuples of order <= maxdeg+1 the expansion evaluates
    exactly like the expression.
    """
    if d is None:
        d = max(max_var_index(e), 1)
    if k is None:
        k = _infer_k(e)
    return _expand(e, maxdeg, d, k)


def _infer_k(e) -> int:
    if isinstance(e, Const) and isinstance(e.value, np.ndarray):
        return e.value.shape[0]
    sizes = {_infer_k(v) for v in vars(e).values() if isinstance(v, NCExpr)}
    sizes.discard(1)
    if len(sizes) > 1:
        raise ValueError(f"inconsistent matrix constant sizes {sorted(sizes)}")
    return sizes.pop() if sizes else 1


def _expand(e, maxdeg, d, k):
    if isinstance(e, Const):
        v = e.value
        if not isinstance(v, np.ndarray):
            v = v * np.eye(k)
        elif v.shape != (k, k):
            raise ValueError(f"matrix constant of size {v.shape}, expected ({k}, {k})")
        return NCSeries.constant(d, v, maxdeg)
    if isinstance(e, Var):
        if e.index > d:
            raise ValueError(f"variable x{e.index} beyond d={d}")
        return NCSeries.variable(d, e.index, k, maxdeg)
    if isinstance(e, Add):
        return _expand(e.left, maxdeg, d, k) + _expand(e.right, maxdeg, d, k)
    if isinstance(e, Sub):
        return _expand(e.left, maxdeg, d, k) - _expand(e.right, maxdeg, d, k)
    if isinstance(e, Mul):
        return series_mul(_expand(e.left, maxdeg, d, k), _expand(e.right, maxdeg, d, k))
    if isinstance(e, ScalarMul):
        return _expand(e.child, maxdeg, d, k).scaled(e.scalar)
    if isinstance(e, Pow):
        out = NCSeries.one(d, k, maxdeg)
        base = _expand(e.child, maxdeg, d, k)
        for _ in range(e.exponent):
            out = series_mul(out, base)
        return out
    if isinstance(e, Adjoint):
        return series_adjoint(_expand(e.child, maxdeg, d, k))
    if isinstance(e, RealPart):
        return real_part(_expand(e.child, maxdeg, d, k))
    if isinstance(e, Inv):
        s = _expand(e.child, maxdeg, d, k)
        c0 = s.coeff(EMPTY_WORD)
        if np.linalg.matrix_rank(c0, tol=1e-12) < k:
            raise NotExpandable("inv() argument has singular constant coefficient")
        c0inv = np.linalg.inv(c0)
        rest = NCSeries.constant(d, c0, maxdeg) - s
        q = NCSeries(d, (k, k), maxdeg, {w: c0inv @ c for w, c in rest.coeffs.items()})
        return series_mul(series_neumann(q), NCSeries.constant(d, c0inv, maxdeg))
    if isinstance(e, Exp):
        s = _expand(e.child, maxdeg, d, k)
        if EMPTY_WORD in s.coeffs:
            raise NotExpandable("exp() argument must vanish at 0")
        out = NCSeries.one(d, k, maxdeg)
        power = NCSeries.one(d, k, maxdeg)
        for m in range(1, maxdeg + 1):
            power = series_mul(power, s)
            if not power.coeffs:
                break
            out = out + power.scaled(1.0 / math.factorial(m))
        return out
    if isinstance(e, Log):
        s = _expand(e.child, maxdeg, d, k)
        c0 = s.coeff(EMPTY_WORD)
        if np.max(np.abs(c0 - np.eye(k))) > 1e-12:
            raise NotExpandable("log() argument must equal 1 + p with p(0) = 0")
        p = s - NCSeries.one(d, k, maxdeg)
        return series_log1p(p)
    raise TypeError(f"cannot expand {type(e).__name__}")


def series_log1p(p: NCSeries) -> NCSeries:
    """Mercator series of log(1 + p) for p vanishing at 0."""
    p = p.word_filter(lambda w: len(w) > 0)
    out = NCSeries.zero(p.d, p.shape, p.maxdeg)
    power = NCSeries.one(p.d, p.shape[0], p.maxdeg)
    for m in range(1, p.maxdeg + 1):
        power = series_mul(power, p)
        if not power.coeffs:
            break
        out = out + power.scaled((-1.0) ** (m + 1) / m)
    return out
