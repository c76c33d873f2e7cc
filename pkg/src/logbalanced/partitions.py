"""The partition families and their exact cells.

Every family answers ``cell(x, n)``: the open interval of the depth-n
partition containing the point ``x``. For sampled points the whole
resolution neighbourhood must fit in that cell, otherwise PrecisionError
is raised and the caller is expected to refine the point.
"""
from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .errors import (DegenerateAlpha, DomainError, EndpointHit, InsufficientDepth,
                     PrecisionError, ResourceError)
from .exactnum import CFExpansion, UnitPoint, cf_expand, frac
from . import weights as W


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= 1:
            raise DomainError(f"bad interval ({self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, v) -> bool:
        return self.lo < v < self.hi

    def contains(self, other: "Interval") -> bool:
        """Inclusion of open intervals."""
        return self.lo <= other.lo and other.hi <= self.hi

    def __str__(self):
        return f"({self.lo}, {self.hi})"


UNIT = Interval(Fraction(0), Fraction(1))


class MeasureKind(enum.Enum):
    LEBESGUE = "lebesgue"
    GAUSS = "gauss"


@dataclass(frozen=True)
class DepthDecomposition:
    m: int
    r: int


# --- closed-form cells from a continued fraction -------------------------------

def _ordered(m: int, a: Fraction, b: Fraction) -> Interval:
    return Interval(a, b) if m % 2 == 0 else Interval(b, a)


def cell_cf(xcf: CFExpansion, n: int) -> Interval:
    """Depth-n continued-fraction cylinder."""
    if n < 0:
        raise DomainError("depth must be >= 0")
    if n >= xcf.depth:
        raise InsufficientDepth(f"cell_cf at depth {n} needs a_{n + 1}")
    p, q = xcf.p, xcf.q
    a = frac(p[n + 1], q[n + 1])
    b = frac(p[n + 1] + p[n], q[n + 1] + q[n])
    return _ordered(n, a, b)


def _mediant_cell(xcf: CFExpansion, m: int, r: int) -> Interval:
    p, q = xcf.p, xcf.q
    pm, qm, pm1, qm1 = p[m + 1], q[m + 1], p[m], q[m]
    a = frac(pm, qm)
    b = frac((r + 1) * pm + pm1, (r + 1) * qm + qm1)
    return _ordered(m, a, b)


def farey_decomposition(xcf: CFExpansion, n: int) -> DepthDecomposition:
    m = xcf.farey_index(n + 1)
    qm, qm1 = xcf.qn(m), xcf.qn(m - 1)
    r = (n + 1 - qm1) // qm - 1
    if not 0 <= r < xcf.an(m + 1):  # pragma: no cover - guaranteed by the bracket
        raise AssertionError("Farey decomposition out of range")
    return DepthDecomposition(m, r)


def cell_farey(xcf: CFExpansion, n: int) -> Tuple[Interval, DepthDecomposition]:
    """Cell of the Farey partition F_n (endpoints: reduced p/q with q <= n+1)."""
    if n < 0:
        raise DomainError("depth must be >= 0")
    d = farey_decomposition(xcf, n)
    return _mediant_cell(xcf, d.m, d.r), d


def sb_decomposition(xcf: CFExpansion, n: int) -> DepthDecomposition:
    s = xcf.quotient_sums
    m = bisect_right(s, n) - 1
    if m + 1 >= len(s):
        raise InsufficientDepth(f"need a_{m + 1} to place depth {n}")
    return DepthDecomposition(m, n - s[m])


def cell_sb(xcf: CFExpansion, n: int) -> Tuple[Interval, DepthDecomposition]:
    """Cell of the Stern-Brocot partition SB_n (2^n cells)."""
    if n < 0:
        raise DomainError("depth must be >= 0")
    d = sb_decomposition(xcf, n)
    return _mediant_cell(xcf, d.m, d.r), d


def farey_adjacency_check(l: Fraction, r: Fraction, n: int) -> bool:
    """Whether l < r are neighbours in the Farey partition F_n."""
    p, q = l.numerator, l.denominator
    p2, q2 = r.numerator, r.denominator
    return q <= n + 1 and q2 <= n + 1 and abs(p2 * q - p * q2) == 1 and q + q2 > n + 1


# --- cells computed directly from the rational value ---------------------------

def _check_interior(iv: Interval, v: Fraction) -> Interval:
    if not iv.lo < v < iv.hi:
        raise EndpointHit(f"{v} is an endpoint of {iv}")
    return iv


def _bary_cell_value(v: Fraction, n: int, b: int) -> Interval:
    scale = b**n
    k, rem = divmod(v.numerator * scale, v.denominator)
    if rem == 0:
        raise EndpointHit(f"{v} is a {b}-adic endpoint at depth {n}")
    return Interval(Fraction(k, scale), Fraction(k + 1, scale))


def _beta_cell_value(v: Fraction, n: int, beta: Fraction) -> Interval:
    # C is the cylinder so far and J = T^i(C) its image; T^i is y -> s*y - c on C.
    clo, chi = Fraction(0), Fraction(1)
    jlo, jhi = Fraction(0), Fraction(1)
    s, c = Fraction(1), Fraction(0)
    t = v
    for _ in range(n):
        bt = beta * t
        d = math.floor(bt)
        if bt == d:
            raise EndpointHit(f"{v} hits a digit boundary")
        nlo = max(jlo, Fraction(d) / beta)
        nhi = min(jhi, Fraction(d + 1) / beta)
        # pull the clipped image back to the cylinder
        clo, chi = (nlo + c) / s, (nhi + c) / s
        jlo, jhi = beta * nlo - d, beta * nhi - d
        s, c = s * beta, c * beta + d
        t = bt - d
    return _check_interior(Interval(clo, chi), v)


def synthetic_layout(f: W.WeightFunction, n: int) -> Tuple[int, int]:
    """(k, t): E_n is the level-k dyadic grid plus its first t level-(k+1) midpoints."""
    m = f.exp_floor(n)
    if m < 1:
        raise DomainError(f"synthetic partition needs f({n}) >= 0")
    k = m.bit_length() - 1
    return k, m - (1 << k)


def _synthetic_cell_value(v: Fraction, n: int, f: W.WeightFunction) -> Interval:
    k, t = synthetic_layout(f, n)
    # cells left of t/2^k are halved
    level = k + 1 if v * (1 << k) < t else k
    return _bary_cell_value(v, level, 2)


# --- three-distance ------------------------------------------------------------

def min_mod_linear(n: int, m: int, a: int, b: int) -> Optional[int]:
    """min over 0 <= x < n of (a*x + b) mod m, in O(log m) steps; None if n <= 0."""
    best = None
    while n > 0:
        a %= m
        b %= m
        if a == 0:
            return b if best is None else min(best, b)
        if 2 * a > m:
            # reverse the order of x so that the step is at most m/2
            b = (a * (n - 1) + b) % m
            a = m - a
        wraps = (a * (n - 1) + b) // m
        best = b if best is None else min(best, b)
        if wraps == 0:
            break
        # after the j-th wrap the first value is (b - j*m) mod a
        n, m, a, b = wraps, a, (-m) % a, (b - m) % a
    return best


SORT_THRESHOLD = 10**4


def _alpha_fraction(alpha) -> Fraction:
    if isinstance(alpha, UnitPoint):
        return alpha.value
    return Fraction(alpha)


def _threedist_neighbours_sort(P: int, Q: int, n: int, v: Fraction) -> Tuple[int, int]:
    lo, hi = 0, Q
    A, B = v.numerator, v.denominator
    c = 0
    for _ in range(n + 1):
        # compare c/Q with A/B
        s = c * B - A * Q
        if s == 0:
            raise EndpointHit(f"{v} is one of the points i*alpha")
        if s < 0:
            if c > lo:
                lo = c
        elif c < hi:
            hi = c
        c += P
        if c >= Q:
            c -= Q
    return lo, hi


def _threedist_neighbours_fast(P: int, Q: int, n: int, v: Fraction) -> Tuple[int, int]:
    c0 = (v.numerator * Q) // v.denominator
    on_grid = c0 * v.denominator == v.numerator * Q
    dl = min_mod_linear(n + 1, Q, (-P) % Q, c0)
    if on_grid and dl == 0:
        raise EndpointHit(f"{v} is one of the points i*alpha")
    dr = min_mod_linear(n + 1, Q, P, -(c0 + 1))
    return c0 - dl, c0 + 1 + min(dr, Q - c0 - 1)


def _threedist_setup(alpha, n: int) -> Tuple[int, int]:
    a = _alpha_fraction(alpha)
    if not 0 < a < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if a.denominator <= n:
        raise DegenerateAlpha(f"denominator {a.denominator} of alpha must exceed n={n}")
    return a.numerator, a.denominator


def threedist_cell_value(alpha, n: int, v: Fraction, method: str = "auto") -> Interval:
    P, Q = _threedist_setup(alpha, n)
    if method == "auto":
        method = "sort" if n <= SORT_THRESHOLD else "fast"
    if method == "sort":
        lo, hi = _threedist_neighbours_sort(P, Q, n, v)
    else:
        lo, hi = _threedist_neighbours_fast(P, Q, n, v)
    return Interval(Fraction(lo, Q), Fraction(hi, Q))


def cell_threedist(alpha, n: int, x: UnitPoint) -> Interval:
    """Gap of {i*alpha mod 1 : 0 <= i <= n} u {1} containing x."""
    return ThreeDistance(_alpha_fraction(alpha)).cell(x, n)


def threedist_points(alpha, n: int) -> List[Fraction]:
    P, Q = _threedist_setup(alpha, n)
    pts = sorted({(i * P) % Q for i in range(n + 1)})
    return [Fraction(c, Q) for c in pts] + [Fraction(1)]


def threedist_profile_sorted(alpha, n: int) -> List[Tuple[Fraction, int]]:
    pts = threedist_points(alpha, n)
    counts = {}
    for a, b in zip(pts, pts[1:]):
        counts[b - a] = counts.get(b - a, 0) + 1
    return sorted(counts.items())


@dataclass(frozen=True)
class ThreeDistanceLaw:
    k: int
    m: int
    r: int
    profile: Tuple[Tuple[Fraction, int], ...]


def threedist_law(alpha, n: int) -> ThreeDistanceLaw:
    """Gap lengths and counts predicted from n = m q_k + q_{k-1} + r."""
    a = _alpha_fraction(alpha)
    _threedist_setup(a, n)
    if n < 1:
        return ThreeDistanceLaw(0, 0, 0, ((Fraction(1), 1),))
    xcf = cf_expand(a)
    k = xcf.farey_index(n)
    qk, qk1 = xcf.qn(k), xcf.qn(k - 1)
    m, r = divmod(n - qk1, qk)
    eta_k = abs(qk * a - xcf.pn(k))
    eta_k1 = abs(qk1 * a - xcf.pn(k - 1))
    raw = [(eta_k, n + 1 - qk), (eta_k1 - m * eta_k, r + 1), (eta_k1 - (m - 1) * eta_k, qk - r - 1)]
    merged = {}
    for length, cnt in raw:
        if cnt:
            merged[length] = merged.get(length, 0) + cnt
    return ThreeDistanceLaw(k, m, r, tuple(sorted(merged.items())))


def threedist_profile(alpha, n: int, method: str = "auto") -> List[Tuple[Fraction, int]]:
    """Sorted (gap length, multiplicity) pairs; at most three entries."""
    if method == "auto":
        method = "sort" if n <= SORT_THRESHOLD else "law"
    if method == "sort":
        return threedist_profile_sorted(alpha, n)
    return list(threedist_law(alpha, n).profile)


# --- families -------------------------------------------------------------------

class PartitionFamily:
    """A sequence of topological partitions P_0 = {(0,1)}, P_1, P_2, ..."""

    self_refining = True

    def _value_cell(self, x: UnitPoint, n: int) -> Interval:
        raise NotImplementedError

    def cell(self, x: UnitPoint, n: int) -> Interval:
        if n < 0:
            raise DomainError("depth must be >= 0")
        if n == 0:
            return UNIT
        try:
            iv = self._value_cell(x, n)
        except (EndpointHit, InsufficientDepth) as exc:
            if x.resolution_bits is not None:
                raise PrecisionError(f"{self.spec()} depth {n} needs more bits") from exc
            if isinstance(exc, InsufficientDepth):
                raise EndpointHit(f"{x.value} is an endpoint of {self.spec()} at depth {n}") from exc
            raise
        nb = x.neighbourhood
        if nb is not None:
            if nb[0] < iv.lo or nb[1] > iv.hi:
                raise PrecisionError(f"{self.spec()} depth {n}: neighbourhood straddles a cell")
        return iv

    def default_weight(self) -> W.WeightFunction:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def cells(self, n: int) -> List[Interval]:
        """All cells at depth n, for enumerable families and small n."""
        pts = self.endpoints(n)
        return [Interval(a, b) for a, b in zip(pts, pts[1:])]

    def endpoints(self, n: int) -> List[Fraction]:
        raise ResourceError(f"{self.spec()} is not enumerable")

    def __repr__(self):
        return f"<{self.spec()}>"


def _cf_family_cell(fn, x: UnitPoint, n: int) -> Interval:
    iv = fn(x.cf, n)
    # for a point with a neighbourhood, PartitionFamily.cell's check is stricter
    return iv if x.resolution_bits is not None else _check_interior(iv, x.value)


ENUM_LIMIT = 1 << 21


@dataclass(frozen=True, repr=False)
class Bary(PartitionFamily):
    b: int = 2

    def __post_init__(self):
        if self.b < 2:
            raise DomainError("base must be >= 2")

    def _value_cell(self, x, n):
        return _bary_cell_value(x.value, n, self.b)

    def default_weight(self):
        return W.bary_weight(self.b)

    def spec(self):
        return f"bary:{self.b}"

    def endpoints(self, n):
        if self.b**n > ENUM_LIMIT:
            raise ResourceError("too many cells to enumerate")
        s = self.b**n
        return [Fraction(i, s) for i in range(s + 1)]


@dataclass(frozen=True, repr=False)
class Beta(PartitionFamily):
    beta: Fraction = Fraction(3, 2)

    def __post_init__(self):
        if Fraction(self.beta) <= 1:
            raise DomainError("beta must be > 1")
        object.__setattr__(self, "beta", Fraction(self.beta))

    def _value_cell(self, x, n):
        return _beta_cell_value(x.value, n, self.beta)

    def default_weight(self):
        import sympy
        return W.Linear(sympy.log(W._as_expr(self.beta)))

    def spec(self):
        return f"beta:{self.beta}"

    def endpoints(self, n):
        beta = self.beta
        ends = set()
        # depth-first over admissible digit strings; each node is (C, J, s, c)
        stack = [(Fraction(0), Fraction(1), Fraction(0), Fraction(1), Fraction(1), Fraction(0), 0)]
        while stack:
            clo, chi, jlo, jhi, s, c, depth = stack.pop()
            if depth == n:
                ends.add(clo)
                ends.add(chi)
                if len(ends) > ENUM_LIMIT:
                    raise ResourceError("too many cells to enumerate")
                continue
            for d in range(math.ceil(beta)):
                nlo = max(jlo, Fraction(d) / beta)
                nhi = min(jhi, Fraction(d + 1) / beta)
                if nlo >= nhi:
                    continue
                stack.append(((nlo + c) / s, (nhi + c) / s, beta * nlo - d, beta * nhi - d,
                              s * beta, c * beta + d, depth + 1))
        return sorted(ends)


@dataclass(frozen=True, repr=False)
class CF(PartitionFamily):
    def _value_cell(self, x, n):
        return _cf_family_cell(cell_cf, x, n)

    def default_weight(self):
        return W.cf_weight()

    def spec(self):
        return "cf"


@dataclass(frozen=True, repr=False)
class Farey(PartitionFamily):
    def _value_cell(self, x, n):
        return _cf_family_cell(lambda c, k: cell_farey(c, k)[0], x, n)

    def default_weight(self):
        return W.TwoLog()

    def spec(self):
        return "farey"

    def endpoints(self, n):
        if (n + 1) ** 2 > 4 * ENUM_LIMIT:
            raise ResourceError("too many cells to enumerate")
        return farey_points(n)


@dataclass(frozen=True, repr=False)
class SternBrocot(PartitionFamily):
    def _value_cell(self, x, n):
        return _cf_family_cell(lambda c, k: cell_sb(c, k)[0], x, n)

    def default_weight(self):
        return W.sb_weight()

    def spec(self):
        return "sb"

    def endpoints(self, n):
        if n > 21:
            raise ResourceError("too many cells to enumerate")
        return sb_points(n)


@dataclass(frozen=True, repr=False)
class ThreeDistance(PartitionFamily):
    alpha: Fraction = Fraction(1, 2)
    self_refining = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha_fraction(self.alpha))

    def _value_cell(self, x, n):
        return threedist_cell_value(self.alpha, n, x.value)

    def default_weight(self):
        return W.OneLog()

    def spec(self):
        return f"3d:{self.alpha}"

    def endpoints(self, n):
        if n > ENUM_LIMIT:
            raise ResourceError("too many cells to enumerate")
        return threedist_points(self.alpha, n)


@dataclass(frozen=True, repr=False)
class Synthetic(PartitionFamily):
    f: W.WeightFunction = None

    def _value_cell(self, x, n):
        return _synthetic_cell_value(x.value, n, self.f)

    def default_weight(self):
        return self.f

    def spec(self):
        return f"synthetic:{self.f.spec()}"

    def endpoints(self, n):
        if n == 0:
            return [Fraction(0), Fraction(1)]
        k, t = synthetic_layout(self.f, n)
        if (1 << k) > ENUM_LIMIT:
            raise ResourceError("too many cells to enumerate")
        fine = [Fraction(i, 1 << (k + 1)) for i in range(2 * t)]
        coarse = [Fraction(i, 1 << k) for i in range(t, (1 << k) + 1)]
        return fine + coarse


def cell_bary(x: UnitPoint, n: int, b: int = 2) -> Interval:
    return Bary(b).cell(x, n)


def cell_beta(x: UnitPoint, n: int, beta) -> Interval:
    return Beta(Fraction(beta)).cell(x, n)


def cell_synthetic(x: UnitPoint, n: int, f: W.WeightFunction) -> Interval:
    return Synthetic(f).cell(x, n)


# --- brute-force oracles -----------------------------------------------------------

@lru_cache(maxsize=64)
def _farey_points_cached(order: int) -> Tuple[Fraction, ...]:
    # next-term recurrence for the Farey sequence of the given order
    a, b, c, d = 0, 1, 1, order
    out = [Fraction(0)]
    while c <= order:
        k = (order + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        out.append(Fraction(a, b))
    return tuple(out)


def farey_points(n: int) -> List[Fraction]:
    """Sorted endpoints of F_n: reduced fractions in [0,1] with denominator <= n+1."""
    return list(_farey_points_cached(n + 1))


@lru_cache(maxsize=32)
def _sb_points_cached(n: int) -> Tuple[Fraction, ...]:
    if n == 0:
        return (Fraction(0), Fraction(1))
    prev = _sb_points_cached(n - 1)
    out = [prev[0]]
    for a, b in zip(prev, prev[1:]):
        out.append(Fraction(a.numerator + b.numerator, a.denominator + b.denominator))
        out.append(b)
    return tuple(out)


def sb_points(n: int) -> List[Fraction]:
    """Sorted endpoints of SB_n by repeated mediant insertion."""
    return list(_sb_points_cached(n))


def brute_cell(points: Sequence[Fraction], v: Fraction) -> Interval:
    i = bisect_left(points, v)
    if i < len(points) and points[i] == v:
        raise EndpointHit(f"{v} is an endpoint")
    return Interval(points[i - 1], points[i])


# --- fibred-system join oracle -----------------------------------------------------

# A branch is (domain, inverse) with inverse u -> (a u + b)/(c u + d) on (0,1).
Mobius = Tuple[int, int, int, int]


def _mob(m: Mobius, u: Fraction) -> Fraction:
    a, b, c, d = m
    return Fraction(a * u.numerator + b * u.denominator, c * u.numerator + d * u.denominator)


def fibred_branches(map_spec) -> List[Tuple[Interval, Mobius]]:
    """Branches of the supported maps: ("bary", b), ("farey",), ("gauss", a_max)."""
    kind = map_spec[0]
    if kind == "bary":
        b = int(map_spec[1])
        return [(Interval(Fraction(i, b), Fraction(i + 1, b)), (1, i, 0, b)) for i in range(b)]
    if kind == "farey":
        half = Fraction(1, 2)
        return [(Interval(Fraction(0), half), (1, 0, 1, 1)),
                (Interval(half, Fraction(1)), (0, 1, 1, 1))]
    if kind == "gauss":
        a_max = int(map_spec[1])
        return [(Interval(Fraction(1, a + 1), Fraction(1, a)), (0, 1, 1, a)) for a in range(1, a_max + 1)]
    raise DomainError(f"unsupported map {map_spec!r}")


def fibred_join_oracle(map_spec, base: Optional[Sequence[Interval]], n: int,
                       limit: int = ENUM_LIMIT) -> List[Interval]:
    """Cells of the join of T^{-j} P for j < n, by exact pull-back of intervals."""
    branches = fibred_branches(map_spec)
    if base is None:
        base = [dom for dom, _ in branches]
    base = sorted(base)
    if n <= 0:
        return [UNIT]
    cells = list(base)
    for _ in range(n - 1):
        pulled = []
        for dom, inv in branches:
            for c in cells:
                a, b = _mob(inv, c.lo), _mob(inv, c.hi)
                lo, hi = min(a, b), max(a, b)
                lo, hi = max(lo, dom.lo), min(hi, dom.hi)
                if lo < hi:
                    pulled.append((lo, hi))
        pulled.sort()
        nxt = []
        for lo, hi in pulled:
            # intersect with the base partition
            for p in base:
                l2, h2 = max(lo, p.lo), min(hi, p.hi)
                if l2 < h2:
                    nxt.append(Interval(l2, h2))
        if len(nxt) > limit:
            raise ResourceError(f"join has more than {limit} cells")
        cells = sorted(nxt)
    return cells
