"""Characteristic Sturmian words and the labelled Farey tree.

The word of alpha is read two ways: by coding the rotation k*alpha mod 1,
and by walking alpha down the Farey partitions, where a splitting cell hands
0 to its left child and 1 to its right child and a cell that survives
unsplit extends its word by palindromic completion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Set, Tuple

from .errors import DomainError, EndpointHit, PrecisionError
from .exactnum import CFRule, UnitPoint, explicit_point, point_from_rule, refine
from .partitions import Farey

MAX_ALPHA_BITS = 1 << 16


def as_alpha_point(alpha, bits: int = 64) -> UnitPoint:
    if isinstance(alpha, UnitPoint):
        return alpha
    if isinstance(alpha, CFRule):
        return point_from_rule(alpha, bits)
    return explicit_point(Fraction(alpha))


def _guarded(alpha, n: int) -> UnitPoint:
    """A point for alpha whose neighbourhood sits inside one cell of F_n."""
    pt = as_alpha_point(alpha)
    while True:
        try:
            Farey().cell(pt, n)
            return pt
        except PrecisionError:
            bits = 2 * (pt.resolution_bits or 64)
            if pt.provenance[0] == "sampled" or bits > MAX_ALPHA_BITS:
                raise
            pt = refine(pt, bits)


def rotation_code(alpha, n: int) -> str:
    """s_1..s_n with s_k = 1 iff {k alpha} lies in (1 - alpha, 1)."""
    if n < 0:
        raise DomainError("length must be >= 0")
    if n == 0:
        return ""
    v = _guarded(alpha, n).value
    P, Q = v.numerator, v.denominator
    # s_k = floor((k+1) alpha) - floor(k alpha)
    out = []
    prev = P // Q
    for k in range(1, n + 1):
        cur = ((k + 1) * P) // Q
        out.append("1" if cur - prev else "0")
        prev = cur
    return "".join(out)


def _walk(v: Fraction, n: int, on_step=None) -> str:
    p1, q1, p2, q2 = 0, 1, 1, 1
    word: List[str] = []
    for d in range(n):
        if q1 + q2 == d + 2:
            mp, mq = p1 + p2, q1 + q2
            s = v.numerator * mq - mp * v.denominator
            if s == 0:
                raise EndpointHit(f"{v} is a Farey endpoint at depth {d + 1}")
            if s < 0:
                word.append("0")
                p2, q2 = mp, mq
            else:
                word.append("1")
                p1, q1 = mp, mq
        else:
            L = q1 + q2 - 2
            word.append(word[L - 1 - d])
        if on_step is not None:
            on_step(d + 1, (p1, q1, p2, q2))
    return "".join(word)


def farey_prefix(alpha, n: int) -> str:
    """Length-n prefix read off the labelled Farey tree."""
    if n < 0:
        raise DomainError("length must be >= 0")
    if n == 0:
        return ""
    return _walk(_guarded(alpha, n).value, n)


def farey_cell_denominators(alpha, n: int) -> Tuple[int, int]:
    iv = Farey().cell(_guarded(alpha, n), n)
    return iv.lo.denominator, iv.hi.denominator


@dataclass(frozen=True)
class PalindromeReport:
    literal: Tuple[int, ...]
    criterion: Tuple[int, ...]

    @property
    def agree(self) -> bool:
        return self.literal == self.criterion


def palindrome_depths(alpha, n_max: int, word_offset: int = 0) -> PalindromeReport:
    """Depths n <= n_max where the prefix of length n + word_offset is a palindrome,
    against the depths where the F_n cell of alpha has q1 + q2 = n + 2.

    The criterion matches prefixes of length n (offset 0).
    """
    pt = _guarded(alpha, n_max + 1)
    word = rotation_code(pt, n_max + word_offset)
    literal = tuple(n for n in range(n_max + 1) if _is_pal(word[: n + word_offset]))
    crit = []

    def step(d, cell):
        if d <= n_max and cell[1] + cell[3] == d + 2:
            crit.append(d)
    crit.append(0)  # F_0 = {(0/1, 1/1)}: 1 + 1 = 0 + 2
    _walk(pt.value, n_max, step)
    return PalindromeReport(literal, tuple(crit))


def _is_pal(w: str) -> bool:
    return w == w[::-1]


# --- the labelled tree ---------------------------------------------------------

@dataclass(frozen=True)
class LabeledCell:
    lo: Fraction
    hi: Fraction
    letter: str
    word: str
    parent: int


class LabeledFareyTree:
    """Labels of every cell of F_0 .. F_{n_max}."""

    def __init__(self, n_max: int):
        if n_max < 0:
            raise DomainError("n_max must be >= 0")
        if n_max > 200:
            raise DomainError("labelled tree is meant for small depths")
        self.levels: List[List[LabeledCell]] = [[LabeledCell(Fraction(0), Fraction(1), "", "", -1)]]
        for d in range(n_max):
            nxt = []
            for i, c in enumerate(self.levels[-1]):
                q1, q2 = c.lo.denominator, c.hi.denominator
                if q1 + q2 == d + 2:
                    m = Fraction(c.lo.numerator + c.hi.numerator, q1 + q2)
                    nxt.append(LabeledCell(c.lo, m, "0", c.word + "0", i))
                    nxt.append(LabeledCell(m, c.hi, "1", c.word + "1", i))
                else:
                    L = q1 + q2 - 2
                    ch = c.word[L - 1 - d]
                    nxt.append(LabeledCell(c.lo, c.hi, ch, c.word + ch, i))
            self.levels.append(nxt)

    @property
    def n_max(self) -> int:
        return len(self.levels) - 1

    def condition_h(self) -> bool:
        """Labels of the children of each cell are pairwise distinct."""
        for d in range(1, len(self.levels)):
            seen: Dict[int, Set[str]] = {}
            for c in self.levels[d]:
                s = seen.setdefault(c.parent, set())
                if c.letter in s:
                    return False
                s.add(c.letter)
        return True

    def words_distinct(self, d: int) -> bool:
        words = [c.word for c in self.levels[d]]
        return len(set(words)) == len(words)

    def word_of(self, v: Fraction, d: int) -> str:
        for c in self.levels[d]:
            if c.lo < v < c.hi:
                return c.word
        raise EndpointHit(f"{v} is an endpoint of F_{d}")

    def to_json(self) -> str:
        return json.dumps({str(d): [{"lo": str(c.lo), "hi": str(c.hi), "letter": c.letter, "word": c.word}
                                    for c in level]
                           for d, level in enumerate(self.levels)}, indent=1)
