import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logbalanced.errors import DomainError, EndpointHit, PrecisionError
from logbalanced.exactnum import Golden, cf_generate, explicit_point, golden_point, sampled_point
from logbalanced.partitions import (CF, UNIT, Bary, Beta, Farey, Interval, SternBrocot, Synthetic,
                                    ThreeDistance, brute_cell, cell_beta, cell_cf, cell_farey,
                                    cell_sb, cell_threedist, farey_adjacency_check, farey_points,
                                    fibred_join_oracle, min_mod_linear, sb_points,
                                    threedist_law, threedist_profile, threedist_profile_sorted)
from logbalanced.weights import Custom, Linear

F = Fraction
GOLD = cf_generate(Golden(), 40)


def test_bary_examples():
    g = golden_point()
    assert Bary(2).cell(g, 2) == Interval(F(1, 2), F(3, 4))
    x = sampled_point(1, 0, 512)
    eps_x = explicit_point(F(5, 8) + F(1, 2**40))
    assert Bary(2).cell(eps_x, 3) == Interval(F(5, 8), F(6, 8))
    assert Bary(10).cell(explicit_point(F(37, 100)), 1) == Interval(F(3, 10), F(4, 10))
    assert Bary(2).cell(x, 0) == UNIT


def test_cf_examples():
    assert cell_cf(GOLD, 2) == Interval(F(1, 2), F(2, 3))
    assert cell_cf(GOLD, 3) == Interval(F(3, 5), F(2, 3))
    assert cell_cf(GOLD, 3).length == F(1, 15)
    assert cell_cf(GOLD, 0) == UNIT


def test_farey_sb_examples():
    iv, d = cell_farey(GOLD, 3)
    assert (d.m, d.r, iv) == (2, 0, Interval(F(1, 2), F(2, 3)))
    iv, d = cell_farey(GOLD, 4)
    assert (d.m, d.r, iv) == (3, 0, Interval(F(3, 5), F(2, 3)))
    assert cell_farey(GOLD, 0)[0] == UNIT
    iv, d = cell_sb(GOLD, 3)
    assert (d.m, d.r, iv) == (3, 0, Interval(F(3, 5), F(2, 3)))
    iv, d = cell_sb(GOLD, 1)
    assert (d.m, d.r, iv) == (1, 0, Interval(F(1, 2), F(1)))
    assert cell_sb(GOLD, 0)[0] == UNIT


def sorted_points(alpha, n):
    return sorted({(i * alpha) % 1 for i in range(n + 1)} | {F(1)})


def test_threedist_examples():
    g = golden_point(512)
    a = g.value
    iv = cell_threedist(a, 4, explicit_point(F(1, 2)))
    # sorted points 0, .236, .472, .618, .854 put 1/2 between {4a} and a
    assert iv == brute_cell(sorted_points(a, 4), F(1, 2))
    assert iv == Interval((4 * a) % 1, a)
    assert cell_threedist(a, 0, explicit_point(F(1, 7))) == UNIT
    near_third = F(1, 3) + F(1, 10**9)
    pts = sorted_points(near_third, 2)
    assert cell_threedist(near_third, 2, explicit_point(F(1, 10))) == brute_cell(pts, F(1, 10))
    assert cell_threedist(near_third, 2, explicit_point(F(1, 10))) == Interval(F(0), near_third)


def test_threedist_profile_examples():
    a = golden_point(512).value
    prof = threedist_profile(a, 4)
    assert [c for _, c in prof] == [2, 3]
    assert abs(float(prof[1][0]) - 0.2360679) < 1e-6 and abs(float(prof[0][0]) - 0.1458980) < 1e-6
    assert sorted(threedist_profile(a, 1)) == sorted([(1 - a, 1), (a, 1)])
    law = threedist_law(a, 4)
    assert (law.k, law.m, law.r) == (2, 1, 1)
    b = F(414213562, 10**9)
    law = threedist_law(b, 2)
    assert list(law.profile) == threedist_profile_sorted(b, 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**6), st.integers(1, 300), st.data())
def test_threedist_law_vs_sort(q, n, data):
    p = data.draw(st.integers(1, q - 1))
    a = F(p, q)
    if a.denominator <= n:
        return
    srt = threedist_profile_sorted(a, n)
    assert len(srt) <= 3
    assert list(threedist_law(a, n).profile) == srt
    if len(srt) == 3:
        assert srt[2][0] == srt[0][0] + srt[1][0]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 60), st.integers(1, 500), st.integers(0, 500), st.integers(0, 500))
def test_min_mod_linear(n, m, a, b):
    assert min_mod_linear(n, m, a, b) == min((a * x + b) % m for x in range(n))


def test_threedist_cell_fast_equals_sort():
    for i in range(40):
        a = sampled_point(5, i, 64).value
        x = sampled_point(6, i, 64)
        for n in (3, 50, 400):
            pts = sorted_points(a, n)
            assert ThreeDistance(a).cell(x, n) == brute_cell(pts, x.value)


def test_beta_examples():
    g = golden_point()
    assert cell_beta(g, 2, 2) == Bary(2).cell(g, 2)
    assert cell_beta(explicit_point(F(9, 10)), 1, F(3, 2)) == Interval(F(2, 3), F(1))


def beta_digits(v, beta, n):
    out = []
    for _ in range(n):
        d = math.floor(beta * v)
        out.append(d)
        v = beta * v - d
    return out


def test_beta_cell_by_grid():
    beta = F(3, 2)
    x = explicit_point(F(1, 2) + F(1, 997))
    iv = cell_beta(x, 2, beta)
    want = beta_digits(x.value, beta, 2)
    grid = [F(i, 4000) for i in range(1, 4000)]
    for v in grid:
        same = beta_digits(v, beta, 2) == want
        if iv.lo < v < iv.hi:
            assert same
        elif v < iv.lo or v > iv.hi:
            assert not same


def test_beta_cells_partition():
    cells = Beta(F(3, 2)).cells(5)
    assert cells[0].lo == 0 and cells[-1].hi == 1
    for c, d in zip(cells, cells[1:]):
        assert c.hi == d.lo


def test_synthetic_examples():
    bin_like = Synthetic(Linear(__import__("sympy").log(2)))
    for n in range(1, 8):
        assert bin_like.endpoints(n) == Bary(2).endpoints(n)
    five = Synthetic(Custom("log(5)"))
    assert five.endpoints(4) == [F(0), F(1, 8), F(1, 4), F(1, 2), F(3, 4), F(1)]


def test_adjacency_examples():
    assert farey_adjacency_check(F(1, 2), F(2, 3), 3)
    assert not farey_adjacency_check(F(1, 2), F(2, 3), 4)
    assert farey_adjacency_check(F(0), F(1), 0)


@pytest.mark.parametrize("n", range(0, 9))
def test_adjacency_matches_enumeration(n):
    pts = farey_points(n)
    for i, l in enumerate(pts[:-1]):
        for r in pts[i + 1:i + 4]:
            assert farey_adjacency_check(l, r, n) == (r == pts[i + 1])


def test_fibred_join_examples():
    cells = fibred_join_oracle(("bary", 2), None, 3)
    assert [c.lo for c in cells] == [F(i, 8) for i in range(8)]
    farey = fibred_join_oracle(("farey",), None, 3)
    ends = sorted({c.lo for c in farey} | {F(1)})
    assert ends == [F(0), F(1, 4), F(1, 3), F(2, 5), F(1, 2), F(3, 5), F(2, 3), F(3, 4), F(1)]
    assert ends == sb_points(3)
    gauss = fibred_join_oracle(("gauss", 6), None, 1)
    assert gauss == sorted(Interval(F(1, a + 1), F(1, a)) for a in range(1, 7))


def test_farey_map_join_matches_sb():
    for n in range(1, 9):
        ends = sorted({c.lo for c in fibred_join_oracle(("farey",), None, n)} | {F(1)})
        assert ends == sb_points(n)


def test_cross_oracle_cells():
    for i in range(200):
        x = sampled_point(11, i, 512)
        for n in range(16):
            assert Farey().cell(x, n) == brute_cell(farey_points(n), x.value)
            assert SternBrocot().cell(x, n) == brute_cell(sb_points(n), x.value)


def test_length_formulas_and_cf_identity():
    for i in range(200):
        x = sampled_point(12, i, 512)
        cf = x.cf
        for n in range(26):
            c = cell_cf(cf, n)
            assert c.length == F(1, cf.qn(n) * (cf.qn(n) + cf.qn(n - 1)))
            k = cf.qn(n) + cf.qn(n - 1) - 1
            assert cell_farey(cf, k)[0] == c
        for n in range(60):
            iv, d = cell_farey(cf, n)
            qm, qm1 = cf.qn(d.m), cf.qn(d.m - 1)
            assert iv.length == F(1, ((d.r + 1) * qm + qm1) * qm)


FAMILIES = [Bary(2), Bary(3), Beta(F(3, 2)), CF(), Farey(), SternBrocot(), Synthetic(Custom("sqrt(n)"))]


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.spec())
def test_nesting(fam):
    for i in range(30):
        x = sampled_point(13, i, 512)
        prev = UNIT
        for n in range(1, 30):
            c = fam.cell(x, n)
            assert prev.contains(c)
            prev = c


@pytest.mark.parametrize("fam", [f for f in FAMILIES if not isinstance(f, CF)] + [ThreeDistance(F(13, 34))],
                         ids=lambda f: f.spec())
def test_partition_property_and_norm_decay(fam):
    norms = []
    for n in range(0, 12):
        cells = fam.cells(n)
        assert cells[0].lo == 0 and cells[-1].hi == 1
        assert all(a.hi == b.lo for a, b in zip(cells, cells[1:]))
        norms.append(max(c.length for c in cells))
        x = sampled_point(14, n, 512)
        assert fam.cell(x, n) in cells
    if fam.self_refining:
        assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_norm_falls_below_one_percent():
    for fam in (Bary(2), Bary(10), Farey(), Synthetic(Custom("sqrt(n)"))):
        n = 0
        while max(c.length for c in fam.cells(n)) >= F(1, 100):
            n += 1
            assert n < 200
    # SB_n keeps the cell (0, 1/(n+1)), so 1% is out of enumeration reach
    assert max(c.length for c in SternBrocot().cells(21)) == F(1, 22)
    # CF cylinders shrink at least like 1/(q_n (q_n + q_{n-1})) on the golden ray
    assert cell_cf(GOLD, 6).length < F(1, 100)


def test_guard_and_endpoints():
    with pytest.raises(EndpointHit):
        Farey().cell(explicit_point(F(1, 2)), 1)
    with pytest.raises(EndpointHit):
        Bary(2).cell(explicit_point(F(1, 4)), 2)
    # 64-bit point near 1/3 cannot resolve deep Farey cells
    x = sampled_point(0, 0, 64)
    with pytest.raises(PrecisionError):
        Farey().cell(x, 2**40)
    with pytest.raises(DomainError):
        Interval(F(1, 2), F(1, 3))


def test_threedist_not_self_refining_flag():
    assert ThreeDistance(F(1, 3)).self_refining is False
