"""Exact rationals, continued fractions and the points we feed to partitions.

Everything here is integer or :class:`fractions.Fraction` arithmetic; no
floating point is involved.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional, Sequence, Tuple

from .errors import DomainError, InsufficientDepth, ResourceError

BigRational = Fraction

DEFAULT_BIT_BOUND = 10**6


def frac(p: int, q: int) -> Fraction:
    """Fraction from a pair already known to be coprime with q > 0."""
    return _coprime_fraction(p, q)


def _make_coprime_fraction():
    try:
        Fraction(1, 2, _normalize=False)
    except TypeError:  # pragma: no cover - newer Pythons dropped the flag
        return Fraction
    return lambda p, q: Fraction(p, q, _normalize=False)


_coprime_fraction = _make_coprime_fraction()


def mediant(l: Fraction, r: Fraction) -> Fraction:
    if l >= r:
        raise DomainError(f"mediant needs l < r, got {l} >= {r}")
    return Fraction(l.numerator + r.numerator, l.denominator + r.denominator)


def iroot_ceil(x: int, k: int) -> int:
    """Smallest integer c >= 0 with c**k >= x."""
    if x < 0 or k < 1:
        raise DomainError("iroot_ceil needs x >= 0 and k >= 1")
    if x < 2 or k == 1:
        return x
    # Newton iteration for the floor root, started above the answer.
    c = 1 << -(-x.bit_length() // k)
    while True:
        d = ((k - 1) * c + x // c ** (k - 1)) // k
        if d >= c:
            break
        c = d
    return c if c**k >= x else c + 1


@dataclass(frozen=True)
class CFExpansion:
    """Partial quotients a_1..a_N with convergents p_n/q_n.

    ``p`` and ``q`` are stored with an offset so that ``p[0]`` is p_{-1};
    use :meth:`pn` / :meth:`qn` for the usual p_n, q_n indexing. ``complete`` is True
    when the quotients are the whole expansion of a rational (last one > 1),
    and False for a prefix of a longer, possibly infinite, expansion.
    """

    a: Tuple[int, ...]
    p: Tuple[int, ...]
    q: Tuple[int, ...]
    complete: bool = False

    @classmethod
    def from_quotients(cls, a: Sequence[int], complete: bool = False,
                       bit_bound: Optional[int] = None) -> "CFExpansion":
        p = [1, 0]
        q = [0, 1]
        for ai in a:
            if ai < 1:
                raise DomainError(f"partial quotients must be positive, got {ai}")
            p.append(ai * p[-1] + p[-2])
            q.append(ai * q[-1] + q[-2])
            if bit_bound is not None and q[-1].bit_length() > bit_bound:
                raise ResourceError(f"continuant exceeds {bit_bound} bits")
        return cls(tuple(a), tuple(p), tuple(q), complete)

    @property
    def depth(self) -> int:
        return len(self.a)

    def an(self, i: int) -> int:
        if not 1 <= i <= len(self.a):
            raise InsufficientDepth(f"a_{i} unknown (have {len(self.a)} quotients)")
        return self.a[i - 1]

    def pn(self, i: int) -> int:
        if not -1 <= i <= len(self.a):
            raise InsufficientDepth(f"p_{i} unknown (have {len(self.a)} quotients)")
        return self.p[i + 1]

    def qn(self, i: int) -> int:
        if not -1 <= i <= len(self.a):
            raise InsufficientDepth(f"q_{i} unknown (have {len(self.a)} quotients)")
        return self.q[i + 1]

    def convergent(self, i: int) -> Fraction:
        return frac(self.pn(i), self.qn(i))

    @property
    def value(self) -> Fraction:
        if not self.complete:
            raise InsufficientDepth("a truncated expansion has no exact value")
        return self.convergent(len(self.a))

    @cached_property
    def farey_thresholds(self) -> Tuple[int, ...]:
        """q_m + q_{m-1} for m = 0..N; strictly increasing."""
        q = self.q
        return tuple(q[i + 1] + q[i] for i in range(len(q) - 1))

    @cached_property
    def quotient_sums(self) -> Tuple[int, ...]:
        """sum_{i<=m} a_i for m = 0..N."""
        out = [0]
        for ai in self.a:
            out.append(out[-1] + ai)
        return tuple(out)

    def farey_index(self, total: int) -> int:
        """The m with q_m + q_{m-1} <= total < q_{m+1} + q_m."""
        th = self.farey_thresholds
        if total < 1:
            raise DomainError("total must be >= 1")
        m = bisect_right(th, total) - 1
        if m + 1 >= len(th):
            raise InsufficientDepth(f"need q_{m + 1} to bracket {total}")
        return m

    def truncate(self, k: int) -> "CFExpansion":
        if k > len(self.a):
            raise InsufficientDepth(f"cannot truncate {len(self.a)} quotients to {k}")
        return CFExpansion(self.a[:k], self.p[: k + 2], self.q[: k + 2], False)


def cf_expand(x: Fraction) -> CFExpansion:
    """Complete expansion of a rational in (0, 1) by the Euclidean algorithm."""
    x = Fraction(x)
    if not 0 < x < 1:
        raise DomainError(f"cf_expand needs 0 < x < 1, got {x}")
    num, den = x.numerator, x.denominator
    a = []
    p1, p0, q1, q0 = 0, 1, 1, 0
    ps, qs = [1, 0], [0, 1]
    while num:
        t, r = divmod(den, num)
        a.append(t)
        p1, p0 = t * p1 + p0, p1
        q1, q0 = t * q1 + q0, q1
        ps.append(p1)
        qs.append(q1)
        den, num = num, r
    # Euclid always ends with a quotient >= 2 for x in (0, 1), so the
    # expansion is already in canonical form.
    return CFExpansion(tuple(a), tuple(ps), tuple(qs), True)


# --- continued-fraction rules -------------------------------------------------

class CFRule:
    """A recipe producing partial quotients a_1, a_2, ...

    ``next_quotient(k, q_k)`` returns a_{k+1} given the continuant q_k built
    so far, or None when a finite rule is exhausted.
    """

    name = "rule"

    def next_quotient(self, k: int, qk: int) -> Optional[int]:
        raise NotImplementedError

    @property
    def finite(self) -> bool:
        return False

    def spec(self) -> str:
        return self.name


@dataclass(frozen=True)
class Finite(CFRule):
    quotients: Tuple[int, ...]
    name = "finite"

    def next_quotient(self, k, qk):
        return self.quotients[k] if k < len(self.quotients) else None

    @property
    def finite(self):
        return True

    def spec(self):
        return "finite:" + ",".join(map(str, self.quotients))


@dataclass(frozen=True)
class Periodic(CFRule):
    preperiod: Tuple[int, ...]
    period: Tuple[int, ...]
    name = "periodic"

    def __post_init__(self):
        if not self.period:
            raise DomainError("period must be nonempty")

    def next_quotient(self, k, qk):
        if k < len(self.preperiod):
            return self.preperiod[k]
        return self.period[(k - len(self.preperiod)) % len(self.period)]

    def spec(self):
        return f"periodic:{','.join(map(str, self.preperiod))};{','.join(map(str, self.period))}"


@dataclass(frozen=True)
class Golden(CFRule):
    """[0; 1, 1, 1, ...] = (sqrt 5 - 1)/2."""
    name = "golden"

    def next_quotient(self, k, qk):
        return 1


@dataclass(frozen=True)
class EulerEMinus2(CFRule):
    """e - 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...]."""
    name = "e-2"

    def next_quotient(self, k, qk):
        j, pos = divmod(k, 3)
        return 2 * (j + 1) if pos == 1 else 1


@dataclass(frozen=True)
class PowerRule(CFRule):
    """a_1 = 1 and a_{k+1} = ceil(q_k ** s)."""
    s: Fraction = Fraction(1)
    name = "power"

    def __post_init__(self):
        if Fraction(self.s) <= 0:
            raise DomainError("PowerRule needs s > 0")

    def next_quotient(self, k, qk):
        if k == 0:
            return 1
        s = Fraction(self.s)
        return iroot_ceil(qk**s.numerator, s.denominator)

    def spec(self):
        return f"power:{self.s}"


def cf_generate(rule: CFRule, k: int, bit_bound: int = DEFAULT_BIT_BOUND) -> CFExpansion:
    """First k partial quotients of ``rule`` with their convergents."""
    if k < 1:
        raise DomainError("cf_generate needs k >= 1")
    a = []
    q1, q0 = 1, 0
    for i in range(k):
        t = rule.next_quotient(i, q1)
        if t is None:
            break
        a.append(t)
        q1, q0 = t * q1 + q0, q1
        if q1.bit_length() > bit_bound:
            raise ResourceError(f"q_{i + 1} exceeds the {bit_bound}-bit bound")
    complete = rule.finite and rule.next_quotient(len(a), q1) is None
    if complete and len(a) > 1 and a[-1] == 1:
        # canonical form: a trailing 1 merges into the previous quotient
        a = a[:-2] + [a[-2] + 1]
    return CFExpansion.from_quotients(a, complete=complete)


def iter_convergent_pairs(rule: CFRule, bit_bound: int = DEFAULT_BIT_BOUND) -> Iterator[Tuple[int, int]]:
    """Yield (p_k, q_k) for k = 1, 2, ... until a finite rule runs out."""
    p1, p0, q1, q0 = 0, 1, 1, 0
    k = 0
    while True:
        t = rule.next_quotient(k, q1)
        if t is None:
            return
        p1, p0 = t * p1 + p0, p1
        q1, q0 = t * q1 + q0, q1
        if q1.bit_length() > bit_bound:
            raise ResourceError(f"q_{k + 1} exceeds the {bit_bound}-bit bound")
        k += 1
        yield p1, q1


# --- points -------------------------------------------------------------------

@dataclass(frozen=True)
class UnitPoint:
    """A point of (0, 1) standing in for a generic real.

    With ``resolution_bits = B`` the point represents every real within
    2**-B of ``value``; partition queries check that this whole neighbourhood
    sits in one cell. ``None`` means the rational itself is meant.
    """

    value: Fraction
    resolution_bits: Optional[int] = None
    provenance: Tuple = field(default=("explicit",), compare=False)

    def __post_init__(self):
        if not 0 < self.value < 1:
            raise DomainError(f"UnitPoint must lie in (0, 1), got {self.value}")

    @property
    def radius(self) -> Optional[Fraction]:
        if self.resolution_bits is None:
            return None
        return Fraction(1, 1 << self.resolution_bits)

    @cached_property
    def neighbourhood(self) -> Optional[Tuple[Fraction, Fraction]]:
        """(value - radius, value + radius), or None for an exact point."""
        r = self.radius
        return None if r is None else (self.value - r, self.value + r)

    @cached_property
    def cf(self) -> CFExpansion:
        return cf_expand(self.value)


def explicit_point(x) -> UnitPoint:
    return UnitPoint(Fraction(x), None, ("explicit",))


def _dyadic_center(r: int, bits: int) -> Fraction:
    # midpoint of the dyadic cell (r/2^bits, (r+1)/2^bits)
    return frac(2 * r + 1, 1 << (bits + 1))


def _round_bits(bits: int) -> int:
    return max(64, -(-bits // 64) * 64)


def sampled_point(seed: int, index: int, bits: int = 512) -> UnitPoint:
    """Uniform sample, deterministic in (seed, index).

    Bits are drawn in 64-bit words, most significant first, so asking for
    more bits refines the same underlying real.
    """
    bits = _round_bits(bits)
    rng = random.Random(f"{seed}:{index}")
    r = 0
    for _ in range(bits // 64):
        r = (r << 64) | rng.getrandbits(64)
    return UnitPoint(_dyadic_center(r, bits), bits + 1, ("sampled", seed, index))


def refine(point: UnitPoint, bits: int) -> UnitPoint:
    """Same underlying real at a higher resolution."""
    kind = point.provenance[0]
    if kind == "sampled":
        return sampled_point(point.provenance[1], point.provenance[2], bits)
    if kind == "cf":
        return point_from_rule(point.provenance[1], bits)
    if kind == "golden":
        return golden_point(bits)
    raise DomainError(f"cannot refine a point of provenance {point.provenance!r}")


def golden_point(bits: int = 512) -> UnitPoint:
    """(sqrt 5 - 1)/2 located in a certified dyadic cell."""
    r = math.isqrt(5 << (2 * bits - 2)) - (1 << (bits - 1))
    return UnitPoint(_dyadic_center(r, bits), bits + 1, ("golden",))


def point_from_rule(rule: CFRule, bits: int = 512,
                    bit_bound: int = DEFAULT_BIT_BOUND) -> UnitPoint:
    """Dyadic cell of the irrational defined by ``rule``.

    The limit lies between consecutive convergents; once both give the same
    floor(x * 2^bits) the cell is certified.
    """
    if rule.finite:
        raise DomainError("point_from_rule needs an infinite rule")
    scale = 1 << bits
    prev = None
    for p, q in iter_convergent_pairs(rule, bit_bound):
        r = (p * scale) // q
        if r == prev:
            return UnitPoint(_dyadic_center(r, bits), bits + 1, ("cf", rule))
        prev = r
    raise DomainError("rule terminated")  # pragma: no cover
