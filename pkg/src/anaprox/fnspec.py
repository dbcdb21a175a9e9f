"""Elementary-function expressions, piecewise functions, and Taylor jets.

Expressions are parsed into a small AST over the variable ``t`` and the
functions sin, cos, exp, log, sqrt, tanh.  Derivatives of any order are
obtained by forward Taylor-mode propagation (see :mod:`anaprox.series`);
no finite differences are used anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import series
from .errors import (EvaluationDomainError, JunctionMismatchError,
                     OrderCapError, ParseError)

__all__ = [
    "Expr", "Const", "Var", "Neg", "BinOp", "Call", "Jet", "PiecewiseFn",
    "parse_expr", "eval_jet", "junction_check", "ORDER_CAP",
    "JUNCTION_TOL",
]

#: Factorial growth of propagation cost makes very high orders pointless.
ORDER_CAP = 64

#: Default absolute tolerance for jet agreement across breakpoints.
JUNCTION_TOL = 1e-9

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


# ---------------------------------------------------------------------------
# AST

class Expr:
    """Base class of expression nodes.  Immutable after construction."""

    def jets(self, ts: np.ndarray, m: int) -> np.ndarray:
        """Derivative values 0..m at each point; shape ``(len(ts), m+1)``."""
        if m > ORDER_CAP:
            raise OrderCapError(f"jet order {m} exceeds cap {ORDER_CAP}")
        ts = np.asarray(ts, dtype=float)
        s = self._series(ts, m)
        out = series.coeffs_to_derivs(s).T
        if not np.all(np.isfinite(out)):
            raise EvaluationDomainError("non-finite jet entries")
        return out

    def jet(self, t: float, m: int) -> "Jet":
        return Jet(m, self.jets(np.array([float(t)]), m)[0])

    def __call__(self, ts):
        return self.jets(np.atleast_1d(np.asarray(ts, dtype=float)), 0)[:, 0]

    def _series(self, ts, m):
        raise NotImplementedError

    @property
    def node_count(self) -> int:
        raise NotImplementedError

    def const_value(self):
        """Value if this subtree is constant, else None."""
        return None


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def _series(self, ts, m):
        return series.constant(self.value, m, ts.shape[0])

    @property
    def node_count(self):
        return 1

    def const_value(self):
        return self.value


@dataclass(frozen=True)
class Var(Expr):
    def _series(self, ts, m):
        return series.variable(ts, m)

    @property
    def node_count(self):
        return 1


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _series(self, ts, m):
        return -self.arg._series(ts, m)

    @property
    def node_count(self):
        return 1 + self.arg.node_count

    def const_value(self):
        v = self.arg.const_value()
        return None if v is None else -v


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _series(self, ts, m):
        if self.op == "^":
            return self._pow_series(ts, m)
        a = self.left._series(ts, m)
        b = self.right._series(ts, m)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return series.smul(a, b)
        if self.op == "/":
            return series.sdiv(a, b)
        raise AssertionError(self.op)

    def _pow_series(self, ts, m):
        base = self.left._series(ts, m)
        p = self.right.const_value()
        if p is not None:
            if float(p).is_integer():
                return series.spow_int(base, int(p))
            return series.spow_real(base, float(p))
        # general exponent: u^v = exp(v * log u)
        expo = self.right._series(ts, m)
        return series.sexp(series.smul(expo, series.slog(base)))

    @property
    def node_count(self):
        return 1 + self.left.node_count + self.right.node_count

    def const_value(self):
        a = self.left.const_value()
        b = self.right.const_value()
        if a is None or b is None:
            return None
        try:
            if self.op == "+":
                return a + b
            if self.op == "-":
                return a - b
            if self.op == "*":
                return a * b
            if self.op == "/":
                return a / b
            if self.op == "^":
                return a ** b
        except (ZeroDivisionError, OverflowError, ValueError):
            return None
        return None


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr

    def _series(self, ts, m):
        u = self.arg._series(ts, m)
        if self.name == "sin":
            return series.ssin(u)
        if self.name == "cos":
            return series.scos(u)
        if self.name == "exp":
            return series.sexp(u)
        if self.name == "log":
            return series.slog(u)
        if self.name == "sqrt":
            return series.ssqrt(u)
        if self.name == "tanh":
            return series.stanh(u)
        raise AssertionError(self.name)

    @property
    def node_count(self):
        return 1 + self.arg.node_count


# ---------------------------------------------------------------------------
# Parser: ^ > unary- > *,/ > +,- ; +,-,*,/ left-assoc, ^ right-assoc.

def _tokenize(source: str):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            tokens.append((c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            try:
                value = float(source[i:j])
            except ValueError:
                raise ParseError(f"bad numeric literal {source[i:j]!r}", i)
            tokens.append((("num", value), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append((("name", source[i:j]), i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, tok):
        got, at = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}", at)

    def parse(self) -> Expr:
        e = self.sum()
        tok, at = self.next()
        if tok != "end":
            raise ParseError("trailing input", at)
        return e

    def sum(self):
        e = self.term()
        while self.peek() in ("+", "-"):
            op, _ = self.next()
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek() in ("*", "/"):
            op, _ = self.next()
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek() == "-":
            self.next()
            return Neg(self.unary())
        if self.peek() == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.next()
            # right-associative; allow a signed exponent
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok, at = self.next()
        if tok == "(":
            e = self.sum()
            self.expect(")")
            return e
        if isinstance(tok, tuple):
            kind, val = tok
            if kind == "num":
                return Const(val)
            if kind == "name":
                if val == "t":
                    return Var()
                if val == "pi":
                    return Const(math.pi)
                if val in _FUNCTIONS:
                    self.expect("(")
                    e = self.sum()
                    self.expect(")")
                    return Call(val, e)
                raise ParseError(f"unknown identifier {val!r}", at)
        raise ParseError(f"unexpected token {tok!r}", at)


def parse_expr(source: str) -> Expr:
    """Parse expression text into an AST; raises ParseError with position."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Jets

@dataclass(frozen=True)
class Jet:
    """Derivative values 0..order at a point (entry k is the k-th derivative)."""

    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.order + 1,):
            raise ValueError("coeffs length must be order + 1")
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, k):
        return self.coeffs[k]


def eval_jet(f, t: float, m: int) -> Jet:
    """Jet of an Expr or PiecewiseFn at ``t`` to order ``m``."""
    if m > ORDER_CAP:
        raise OrderCapError(f"jet order {m} exceeds cap {ORDER_CAP}")
    return f.jet(t, m)


# ---------------------------------------------------------------------------
# Piecewise functions

@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float  # math.inf for a ray
    expr: Expr
    source: str = ""


class PiecewiseFn:
    """A C^r function given by expressions on left-closed intervals.

    The pieces partition ``[lo, hi)``; at each interior breakpoint the
    declared junction order says how many derivatives must match (checked
    at construction against ``junction_tol``).
    """

    def __init__(self, pieces, junction_orders=None, order=math.inf,
                 junction_tol: float = JUNCTION_TOL):
        ps = []
        for p in pieces:
            if isinstance(p, Piece):
                ps.append(p)
            else:
                lo, hi, ex = p
                src = ex if isinstance(ex, str) else ""
                expr = parse_expr(ex) if isinstance(ex, str) else ex
                ps.append(Piece(float(lo), float(hi), expr, src))
        if not ps:
            raise ValueError("at least one piece required")
        for a, b in zip(ps, ps[1:]):
            if a.hi != b.lo:
                raise ValueError("piece intervals must partition the domain")
        for p in ps:
            if not p.lo < p.hi:
                raise ValueError("empty piece interval")
        self.pieces = tuple(ps)
        self.domain = (ps[0].lo, ps[-1].hi)
        self.order = order
        self.junction_orders = dict(junction_orders or {})
        self.junction_tol = junction_tol
        self._breaks = np.array([p.lo for p in ps[1:]])
        report = junction_check(self, junction_tol)
        bad = [(b, mm) for b, mm in report if mm > junction_tol]
        if bad:
            raise JunctionMismatchError(
                f"jet mismatch beyond tolerance at breakpoints {bad}")

    @property
    def breakpoints(self):
        return list(self._breaks)

    def jets(self, ts: np.ndarray, m: int) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        lo, hi = self.domain
        if np.any(ts < lo) or np.any(ts >= hi):
            raise EvaluationDomainError(
                f"point outside domain [{lo}, {hi})")
        # left-closed convention: a breakpoint belongs to the right piece
        idx = np.searchsorted(self._breaks, ts, side="right")
        out = np.empty((ts.shape[0], m + 1))
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = self.pieces[i].expr.jets(ts[mask], m)
        return out

    def jet(self, t: float, m: int) -> Jet:
        return Jet(m, self.jets(np.array([float(t)]), m)[0])

    def __call__(self, ts):
        return self.jets(np.atleast_1d(np.asarray(ts, dtype=float)), 0)[:, 0]

    # -- serialization -------------------------------------------------
    def to_document(self) -> dict:
        return {
            "pieces": [
                {"from": p.lo,
                 "to": "inf" if math.isinf(p.hi) else p.hi,
                 "expr": p.source or _format(p.expr)}
                for p in self.pieces
            ],
            "junction_orders": {repr(float(k)): int(v)
                                for k, v in self.junction_orders.items()},
            "order": "inf" if self.order == math.inf else int(self.order),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "PiecewiseFn":
        pieces = []
        for p in doc["pieces"]:
            hi = math.inf if p["to"] == "inf" else float(p["to"])
            pieces.append((float(p["from"]), hi, p["expr"]))
        jo = {float(k): int(v)
              for k, v in doc.get("junction_orders", {}).items()}
        order = doc.get("order", "inf")
        order = math.inf if order == "inf" else int(order)
        return cls(pieces, jo, order)


def junction_check(f: PiecewiseFn, tol: float) -> list[tuple[float, float]]:
    """Max jet mismatch at each breakpoint, up to its declared order."""
    report = []
    for i, b in enumerate(f._breaks):
        k = int(f.junction_orders.get(b, 0))
        left = f.pieces[i].expr.jets(np.array([b]), k)[0]
        right = f.pieces[i + 1].expr.jets(np.array([b]), k)[0]
        report.append((float(b), float(np.max(np.abs(left - right)))))
    return report


def _format(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Neg):
        return f"-({_format(e.arg)})"
    if isinstance(e, BinOp):
        return f"({_format(e.left)}){e.op}({_format(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({_format(e.arg)})"
    raise AssertionError(type(e))
