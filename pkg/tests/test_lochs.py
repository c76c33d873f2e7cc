from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logbalanced.errors import CapExceeded, NotSelfRefining
from logbalanced.exactnum import CFExpansion, Golden, UnitPoint, cf_generate, golden_point, sampled_point
from logbalanced.lochs import (Method, cf_depth_in_farey, default_cap, lochs, lochs_cf_to_farey,
                               lochs_closed_form, lochs_farey_to_cf, lochs_generic,
                               lochs_linear_scan)
from logbalanced.partitions import (CF, Bary, Beta, Farey, SternBrocot, ThreeDistance, brute_cell,
                                    cell_cf, cell_farey, farey_points)

F = Fraction
GOLD = cf_generate(Golden(), 40)


def scan_oracle(src, v, l_max):
    """Largest l <= l_max whose enumerated Farey cell at v contains src."""
    best = 0
    for l in range(l_max + 1):
        c = brute_cell(farey_points(l), v)
        if c.lo <= src.lo and src.hi <= c.hi:
            best = l
    return best


def test_farey_self_pair_is_2n_minus_1():
    # x in (1/11, 1/10): F_10 cell is (1/11, 1/10); the mediant 2/21 enters F_20
    x = UnitPoint(F(1, 11) + F(1, 220) + F(1, 2**70), 256)
    src = Farey().cell(x, 10)
    assert src == (F(1, 11), F(1, 10)) or (src.lo, src.hi) == (F(1, 11), F(1, 10))
    L = lochs_generic(x, Farey(), Farey(), 10).L
    assert L == scan_oracle(src, x.value, 30) == 19


def test_self_pair_at_least_n():
    x = sampled_point(2, 0, 512)
    for fam in (Bary(2), CF(), Farey(), SternBrocot(), Beta(F(3, 2))):
        for n in range(0, 12):
            assert lochs_generic(x, fam, fam, n, "resolution").L >= n


def test_golden_cf_to_farey():
    g = golden_point()
    assert lochs(g, CF(), Farey(), 3).L == 6
    assert lochs_generic(g, CF(), Farey(), 3).L == 6
    assert scan_oracle(cell_cf(g.cf, 3), g.value, 8) == 6


def test_closed_form_examples():
    assert lochs_cf_to_farey(GOLD, 3).L == 6
    assert lochs_cf_to_farey(GOLD, 1).L == 1
    two = CFExpansion.from_quotients([2, 1, 1, 1, 1])
    assert lochs_cf_to_farey(two, 1).L == 3
    assert lochs_farey_to_cf(GOLD, 4).L == 3
    assert lochs_farey_to_cf(GOLD, 1).L == 1
    assert lochs_farey_to_cf(GOLD, 7).L == 4
    assert cf_depth_in_farey(GOLD, 3) == 4
    assert cf_depth_in_farey(GOLD, 1) == 1
    assert cf_depth_in_farey(GOLD, 0) == 0
    for n in range(6):
        assert cell_farey(GOLD, cf_depth_in_farey(GOLD, n))[0] == cell_cf(GOLD, n)


def test_oracle_equivalence_sample():
    for i in range(150):
        x = sampled_point(3, i, 512)
        for n in range(26):
            for p1, p2 in ((CF(), Farey()), (Farey(), CF())):
                g = lochs_generic(x, p1, p2, n, "resolution")
                c = lochs_closed_form(x, p1, p2, n)
                assert g.L == c.L and g.method is Method.GENERIC and c.method is Method.CLOSED_FORM


def test_against_enumeration_small():
    for i in range(40):
        x = sampled_point(4, i, 512)
        for n in range(0, 5):
            src = CF().cell(x, n)
            L = lochs_generic(x, CF(), Farey(), n).L
            if L < 60:
                assert L == scan_oracle(src, x.value, L + 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(Bary(2), Farey()), (Bary(10), CF()), (CF(), Bary(2)),
                                              (SternBrocot(), CF()), (Farey(), SternBrocot())]))
def test_monotone_in_n(i, pair):
    x = sampled_point(5, i, 1024)
    Ls = [lochs_generic(x, *pair, n, "resolution").L for n in range(0, 20)]
    assert all(a <= b for a, b in zip(Ls, Ls[1:]))


def test_definition_recheck():
    x = sampled_point(6, 0, 1024)
    for n in (5, 20, 60):
        rec = lochs_generic(x, Bary(2), CF(), n)
        src = Bary(2).cell(x, n)
        assert CF().cell(x, rec.L).contains(src)
        assert not CF().cell(x, rec.L + 1).contains(src)


def test_default_cap_finite_for_balanced_pairs():
    for i in range(20):
        x = sampled_point(7, i, 2048)
        for pair in ((Bary(10), CF()), (CF(), Bary(10)), (Bary(2), Farey())):
            assert lochs_generic(x, *pair, 50).L < default_cap(*pair, 50)


def test_cap_exceeded():
    x = sampled_point(8, 0, 512)
    with pytest.raises(CapExceeded):
        lochs_generic(x, Bary(2), Bary(2), 40, cap=5)


def test_non_self_refining():
    x = sampled_point(9, 0, 512)
    td = ThreeDistance(sampled_point(10, 0, 64).value)
    with pytest.raises(NotSelfRefining):
        lochs_generic(x, Bary(2), td, 5)
    rec = lochs_linear_scan(x, Bary(2), td, 8, cap=400)
    assert rec.flagged and rec.method is Method.LINEAR_SCAN
    assert lochs(x, Bary(2), td, 8, cap=400).flagged
