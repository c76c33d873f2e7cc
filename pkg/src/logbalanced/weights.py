"""Weight functions f(n) and certified real evaluation.

A weight function is a sympy expression in the symbol ``n``. Values are
evaluated with mpmath interval arithmetic at escalating precision, so every
comparison or floor we report is certified rather than rounded.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import sympy
from mpmath import iv, mpf

from .errors import ConfigError, PrecisionError

N = sympy.Symbol("n", positive=True)

START_PREC = 96
MAX_PREC = 1 << 17


@contextmanager
def iv_precision(prec: int):
    old = iv.prec
    iv.prec = prec
    try:
        yield
    finally:
        iv.prec = old


def iv_int(k: int):
    return iv.mpf(k)


def iv_rational(x) -> "iv.mpf":
    x = Fraction(x)
    if x.denominator == 1:
        return iv.mpf(x.numerator)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def iv_finite(v) -> bool:
    return bool(math.isfinite(float(v.a)) and math.isfinite(float(v.b)))


def iv_width_ok(v, bits: int) -> bool:
    """True when the interval pins its value to ``bits`` relative bits."""
    if not iv_finite(v):
        return False
    a, b = mpf(v.a), mpf(v.b)
    w = b - a
    mag = max(abs(a), abs(b))
    if mag == 0:
        return True
    return w <= mag * mpf(2) ** (-bits)


# --- expression compiler ------------------------------------------------------

def _compile(e: sympy.Expr) -> Callable:
    """Turn a sympy expression into a closure k -> iv interval."""
    if e == N:
        return lambda k: iv.mpf(k)
    if e.is_Integer:
        v = int(e)
        return lambda k: iv.mpf(v)
    if e.is_Rational:
        p, q = int(e.p), int(e.q)
        return lambda k: iv.mpf(p) / iv.mpf(q)
    if e == sympy.pi:
        return lambda k: iv.pi
    if e == sympy.E:
        return lambda k: iv.e
    if e.is_Add:
        parts = [_compile(t) for t in e.args]

        def add(k):
            s = parts[0](k)
            for f in parts[1:]:
                s = s + f(k)
            return s
        return add
    if e.is_Mul:
        parts = [_compile(t) for t in e.args]

        def mul(k):
            s = parts[0](k)
            for f in parts[1:]:
                s = s * f(k)
            return s
        return mul
    if e.is_Pow:
        base = _compile(e.base)
        ex = e.exp
        if ex.is_Integer:
            m = int(ex)
            if m >= 0:
                return lambda k: base(k) ** m
            return lambda k: 1 / base(k) ** (-m)
        if ex == sympy.Rational(1, 2):
            return lambda k: iv.sqrt(base(k))
        power = _compile(ex)
        return lambda k: iv.exp(power(k) * iv.log(base(k)))
    if isinstance(e, sympy.log):
        if len(e.args) != 1:
            raise ConfigError(f"unsupported log form {e}")
        arg = _compile(e.args[0])
        return lambda k: iv.log(arg(k))
    if isinstance(e, sympy.exp):
        arg = _compile(e.args[0])
        return lambda k: iv.exp(arg(k))
    raise ConfigError(f"cannot evaluate {e!r} in interval arithmetic")


def _as_expr(y) -> sympy.Expr:
    if isinstance(y, sympy.Basic):
        return y
    if isinstance(y, Fraction):
        return sympy.Rational(y.numerator, y.denominator)
    if isinstance(y, float):
        # floats enter exactly as the binary rational they are
        return sympy.Rational(*y.as_integer_ratio())
    if isinstance(y, int):
        return sympy.Integer(y)
    return sympy.sympify(y)


NEG_INF = float("-inf")


@dataclass(frozen=True)
class WeightFunction:
    """A normalising sequence f(n), either a closed form in ``n`` or a table."""

    label: str
    expr: Optional[sympy.Expr] = None
    table: Optional[tuple] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if (self.expr is None) == (self.table is None):
            raise ConfigError("WeightFunction needs exactly one of expr / table")

    # sympy value at an integer; may be -oo/zoo at singular points
    def exact(self, k: int) -> sympy.Expr:
        if self.table is not None:
            if not 0 <= k < len(self.table):
                raise ConfigError(f"table weight {self.label} undefined at n={k}")
            return self.table[k]
        return self.expr.subs(N, k)

    @cached_property
    def _fn(self):
        if self.expr is None:
            return None
        return _compile(self.expr)

    @cached_property
    def _rational_valued(self) -> bool:
        if self.table is not None:
            return all(v.is_Rational for v in self.table)
        if not self.expr.is_polynomial(N):
            return False
        return all(c.is_Rational for c in sympy.Poly(self.expr, N).coeffs())

    def _singular(self, k: int) -> bool:
        v = self.exact(k)
        return not (v.is_finite and v.is_real)

    def interval(self, k: int, prec: int):
        """f(k) as an iv interval at working precision ``prec`` (or None if singular)."""
        with iv_precision(prec):
            if self.table is not None:
                v = self.exact(k)
                if not (v.is_finite and v.is_real):
                    return None
                return _compile(v)(k)
            if k <= 2 and self._singular(k):
                return None
            try:
                v = self._fn(k)
            except (ZeroDivisionError, ValueError):
                return None
            if not iv_finite(v):
                return None if self._singular(k) else v
            return v

    def evaluate(self, k: int, bits: int = 50):
        """Certified interval for f(k) with ``bits`` relative bits; -inf when singular."""
        prec = START_PREC + bits
        while prec <= MAX_PREC:
            v = self.interval(k, prec)
            if v is None:
                return NEG_INF
            if iv_width_ok(v, bits):
                return v
            prec *= 2
        raise PrecisionError(f"cannot certify {self.label} at n={k}")

    def __call__(self, k: int) -> float:
        v = self.evaluate(k)
        if v is NEG_INF:
            return NEG_INF
        return float(v.mid)

    def ge(self, k: int, y) -> bool:
        """Certified decision of f(k) >= y."""
        ye = _as_expr(y)
        return self._ge(k, ye, _compile(ye))

    def _ge(self, k: int, ye, yfn) -> bool:
        prec = START_PREC
        while prec <= MAX_PREC:
            v = self.interval(k, prec)
            if v is None:
                return False
            with iv_precision(prec):
                d = v - yfn(k)
            if iv_finite(d):
                if d.a >= 0:
                    return True
                if d.b < 0:
                    return False
            if prec == START_PREC:
                # ties between exact rationals never resolve numerically
                if self._rational_valued and ye.is_Rational:
                    return bool(self.exact(k) >= ye)
                # f(k) - y can be as small as 1/k; skip straight to that scale
                prec = max(2 * prec, 2 * k.bit_length() + START_PREC)
                continue
            prec *= 2
        if sympy.simplify(self.exact(k) - ye) == 0:
            return True
        raise PrecisionError(f"cannot decide {self.label}({k}) >= {ye}")

    def exp_floor(self, k: int) -> int:
        """floor(e^{f(k)}), certified."""
        key = ("expfloor", k)
        if key in self._cache:
            return self._cache[key]
        ev = self.exact(k)
        out = None
        ex = sympy.exp(ev)
        if ex.is_Rational:
            out = int(sympy.floor(ex))
        else:
            v = self.evaluate(k, 50)
            if v is NEG_INF:
                out = 0
            else:
                mag = max(0, int(float(v.b) / math.log(2)))
                prec = START_PREC + mag
                while prec <= MAX_PREC + mag:
                    w = self.interval(k, prec)
                    with iv_precision(prec):
                        e = iv.exp(w)
                    lo, hi = int(math.floor(mpf(e.a))), int(math.floor(mpf(e.b)))
                    if lo == hi and iv_finite(e):
                        out = lo
                        break
                    prec *= 2
                if out is None:
                    raise PrecisionError(f"cannot certify floor(exp({self.label}({k})))")
        self._cache[key] = out
        return out

    def spec(self) -> str:
        return self.label


def _weight(label: str, expr) -> WeightFunction:
    return WeightFunction(label, expr=sympy.sympify(expr))


def Linear(h) -> WeightFunction:
    h = _as_expr(h)
    return _weight(f"linear:{h}", h * N)


def TwoLog() -> WeightFunction:
    return _weight("twolog", 2 * sympy.log(N))


def OneLog() -> WeightFunction:
    return _weight("onelog", sympy.log(N))


def NOverLogN(c) -> WeightFunction:
    c = _as_expr(c)
    return _weight(f"nlogn:{c}", c * N / sympy.log(N))


def Custom(spec: Union[str, sympy.Expr, Sequence]) -> WeightFunction:
    """A closed form in n (string or sympy) or a table f(0), f(1), ..."""
    if isinstance(spec, (list, tuple)):
        return WeightFunction("table", table=tuple(_as_expr(v) for v in spec))
    if isinstance(spec, str):
        try:
            expr = sympy.sympify(spec, locals={"n": N})
        except (sympy.SympifyError, SyntaxError) as exc:
            raise ConfigError(f"bad weight expression {spec!r}") from exc
    else:
        expr = spec.subs(sympy.Symbol("n"), N)
    if expr.free_symbols - {N}:
        raise ConfigError(f"weight expression may only use n: {spec}")
    return WeightFunction(f"custom:{expr}", expr=expr)


LOG2 = sympy.log(2)
CF_ENTROPY = sympy.pi**2 / (6 * sympy.log(2))


def binary_weight() -> WeightFunction:
    return Linear(LOG2)


def bary_weight(b: int) -> WeightFunction:
    return Linear(sympy.log(b))


def cf_weight() -> WeightFunction:
    return Linear(CF_ENTROPY)


def sb_weight() -> WeightFunction:
    return NOverLogN(sympy.pi**2 / 6)


def parse_weight(spec: str) -> WeightFunction:
    """Weight spec used by the CLI: linear:<h>, twolog, onelog, nlogn:<c>, or an expression."""
    spec = spec.strip()
    head, _, arg = spec.partition(":")
    if head == "linear" and arg:
        return Linear(sympy.sympify(arg))
    if head == "twolog" and not arg:
        return TwoLog()
    if head == "onelog" and not arg:
        return OneLog()
    if head == "nlogn" and arg:
        return NOverLogN(sympy.sympify(arg))
    if head == "custom" and arg:
        return Custom(arg)
    return Custom(spec)


def inverse_weight(f: WeightFunction, y) -> int:
    """min{n >= 0 : f(n) >= y} for nondecreasing f, by galloping search."""
    ye = _as_expr(y)
    yfn = _compile(ye)
    if f._ge(0, ye, yfn):
        return 0
    lo, hi = 0, 1
    while not f._ge(hi, ye, yfn):
        lo, hi = hi, hi * 2
    # invariant: f(lo) < y <= f(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f._ge(mid, ye, yfn):
            hi = mid
        else:
            lo = mid
    return hi
