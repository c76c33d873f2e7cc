"""Lochs indexes: how deep a second partition is resolved by a cell of the first.

``lochs_generic`` answers the question by exact containment tests; the
CF/Farey closed forms are independent routes used to cross-check it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import sympy

from .errors import (CapExceeded, DomainError, EndpointHit, InsufficientDepth,
                     NotSelfRefining, PrecisionError)
from .exactnum import CFExpansion, UnitPoint
from .partitions import CF, Bary, Beta, Farey, Interval, PartitionFamily, SternBrocot
from .weights import inverse_weight


class Method(enum.Enum):
    GENERIC = "generic"
    CLOSED_FORM = "closed_form"
    LINEAR_SCAN = "linear_scan"


@dataclass(frozen=True)
class LochsRecord:
    n: int
    L: int
    pair: Tuple[str, str]
    point_id: tuple
    method: Method
    # set for the linear-scan variant on non-self-refining targets
    flagged: bool = False


def _contained(src: Interval, x: UnitPoint, p2: PartitionFamily, l: int) -> bool:
    try:
        target = p2.cell(x, l)
    except (PrecisionError, EndpointHit):
        # x's neighbourhood (inside src) meets an endpoint of P2_l, so src straddles cells
        return False
    return target.contains(src)


_CAP_CACHE: Dict[Tuple[str, str, int], int] = {}


def default_cap(p1: PartitionFamily, p2: PartitionFamily, n: int) -> int:
    """inverse_weight(f2, 3 f1(n)) + 64 with the families' default weights."""
    key = (p1.spec(), p2.spec(), n)
    if key not in _CAP_CACHE:
        y = p1.default_weight().exact(n)
        if not (y.is_finite and y.is_real) or y < 0:
            y = sympy.Integer(0)
        _CAP_CACHE[key] = inverse_weight(p2.default_weight(), 3 * y) + 64
    return _CAP_CACHE[key]


def resolution_cap(p2: PartitionFamily, length) -> Optional[int]:
    """A depth at which no cell of p2 is as long as ``length``, so containment must fail.

    Uses the sup-cell bounds b^-l (Bary), beta^-l (Beta), 1/(l+1) (Farey, SB) and
    2^-(l-1) (CF, from q_l >= 2^((l-1)/2)); None for other families.
    """
    length = Fraction(length)
    inv = length.denominator // length.numerator + 1  # > 1/length
    if isinstance(p2, (Farey, SternBrocot)):
        return inv
    if isinstance(p2, CF):
        return inv.bit_length() + 1
    if isinstance(p2, Bary):
        l, s = 0, 1
        while s < inv:
            l, s = l + 1, s * p2.b
        return l
    if isinstance(p2, Beta):
        l, s = 0, Fraction(1)
        while s < inv:
            l, s = l + 1, s * p2.beta
        return l
    return None


def _record(x, p1, p2, n, L, method, flagged=False) -> LochsRecord:
    return LochsRecord(n, L, (p1.spec(), p2.spec()), tuple(x.provenance), method, flagged)


def lochs_generic(x: UnitPoint, p1: PartitionFamily, p2: PartitionFamily, n: int,
                  cap=None) -> LochsRecord:
    """Largest l <= cap with P1_n(x) inside P2_l(x), by doubling then bisection.

    ``cap`` is an int, None for the weight-based default, or "resolution" for
    :func:`resolution_cap` (falling back to the default when unavailable).
    """
    if not p2.self_refining:
        raise NotSelfRefining(f"{p2.spec()} is not self-refining; use lochs_linear_scan")
    src = p1.cell(x, n)
    if cap == "resolution":
        cap = resolution_cap(p2, src.length)
    if cap is None:
        cap = default_cap(p1, p2, n)
    lo, hi = 0, 1
    while True:
        if hi >= cap:
            if _contained(src, x, p2, cap):
                raise CapExceeded(cap)
            hi = cap
            break
        if not _contained(src, x, p2, hi):
            break
        lo, hi = hi, 2 * hi
    # invariant: contained at lo, not at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _contained(src, x, p2, mid):
            lo = mid
        else:
            hi = mid
    if not (_contained(src, x, p2, lo) and not _contained(src, x, p2, lo + 1)):
        raise AssertionError(f"Lochs search invariant failed at L={lo}")
    return _record(x, p1, p2, n, lo, Method.GENERIC)


def lochs_linear_scan(x: UnitPoint, p1: PartitionFamily, p2: PartitionFamily, n: int,
                      cap: int) -> LochsRecord:
    """sup of the containment set over 0..cap, for targets that are not self-refining."""
    src = p1.cell(x, n)
    if _contained(src, x, p2, cap):
        raise CapExceeded(cap)
    best = 0
    for l in range(1, cap):
        if _contained(src, x, p2, l):
            best = l
    return _record(x, p1, p2, n, best, Method.LINEAR_SCAN, flagged=not p2.self_refining)


def _need(xcf: CFExpansion, n: int):
    if n < 0:
        raise DomainError("depth must be >= 0")
    if n > xcf.depth or (xcf.complete and n >= xcf.depth):
        raise InsufficientDepth(f"continuant q_{n} unavailable")


def cf_to_farey_index(xcf: CFExpansion, n: int) -> int:
    _need(xcf, n)
    return 2 * xcf.qn(n) + xcf.qn(n - 1) - 2


def farey_to_cf_index(xcf: CFExpansion, n: int) -> int:
    if n < 0:
        raise DomainError("depth must be >= 0")
    return xcf.farey_index(n + 1)


def cf_depth_in_farey(xcf: CFExpansion, n: int) -> int:
    """Depth at which the Farey cell of x equals its depth-n CF cell."""
    _need(xcf, n)
    return xcf.qn(n) + xcf.qn(n - 1) - 1


def _closed_record(xcf, n, L, pair, point_id) -> LochsRecord:
    return LochsRecord(n, L, pair, point_id, Method.CLOSED_FORM)


def lochs_cf_to_farey(xcf: CFExpansion, n: int, point_id: tuple = ("cf",)) -> LochsRecord:
    return _closed_record(xcf, n, cf_to_farey_index(xcf, n), ("cf", "farey"), point_id)


def lochs_farey_to_cf(xcf: CFExpansion, n: int, point_id: tuple = ("cf",)) -> LochsRecord:
    return _closed_record(xcf, n, farey_to_cf_index(xcf, n), ("farey", "cf"), point_id)


def has_closed_form(p1: PartitionFamily, p2: PartitionFamily) -> bool:
    return (isinstance(p1, CF) and isinstance(p2, Farey)) or (isinstance(p1, Farey) and isinstance(p2, CF))


def lochs_closed_form(x: UnitPoint, p1: PartitionFamily, p2: PartitionFamily, n: int) -> LochsRecord:
    """Closed-form index for a point; the source cell is computed first so the guard applies."""
    if not has_closed_form(p1, p2):
        raise DomainError(f"no closed form for {p1.spec()} -> {p2.spec()}")
    p1.cell(x, n)
    if isinstance(p1, CF):
        rec = lochs_cf_to_farey(x.cf, n, tuple(x.provenance))
    else:
        rec = lochs_farey_to_cf(x.cf, n, tuple(x.provenance))
    return rec


def lochs(x: UnitPoint, p1: PartitionFamily, p2: PartitionFamily, n: int,
          cap: Optional[int] = None, engine: str = "auto") -> LochsRecord:
    """Dispatch: closed form when available (engine auto/closed), else generic search."""
    if engine == "closed" or (engine == "auto" and has_closed_form(p1, p2)):
        return lochs_closed_form(x, p1, p2, n)
    if engine == "scan" or (engine == "auto" and not p2.self_refining):
        return lochs_linear_scan(x, p1, p2, n, cap if cap is not None else default_cap(p1, p2, n))
    return lochs_generic(x, p1, p2, n, cap)
